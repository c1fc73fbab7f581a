# app/utils/error_messages.py

ERROR_MESSAGES = {
    "validation": {
        "invalid_config": "Invalid configuration. Please check the values and their ranges.",
        "empty_corpus": "The corpus is empty.",
        "empty_documents": "At least one non-empty document is required.",
        "empty_responses": "At least one response is required.",
        "length_mismatch": "Responses and references must have the same length.",
        "paired_length_mismatch": "Paired outcomes must have the same number of items.",
        "no_ngrams": "The responses contain no n-grams of the requested order.",
        "no_tokens": "The responses contain no tokens.",
        "empty_stop_list": "The stop-word list is empty.",
        "dimension_mismatch": "Vectors must have the same dimension.",
        "invalid_grid": "Grid values must be comma-separated numbers.",
        "bad_pairs_line": "Expected 'source<TAB>target' on line {line}.",
    },
    "not_found": {
        "file": "File not found: {path}",
        "artifact": "Model artifact not found: {path}. Run the corresponding training command first.",
    },
    "artifact": {
        "bad_header": "Unexpected header in {path}: expected '{expected}'.",
        "exists": "Refusing to overwrite {path}; pass --force to replace it.",
    },
    "server_error": {
        "train_hmmlda": "An unexpected error occurred while training the syntax-topic model.",
        "build_sif": "An unexpected error occurred while fitting the sentence embedding model.",
        "train_lm": "An unexpected error occurred while training the language models.",
        "decode": "An unexpected error occurred while decoding.",
        "rerank": "An unexpected error occurred while reranking.",
        "evaluate": "An unexpected error occurred while computing metrics.",
    },
}
