import os
from dotenv import load_dotenv

# Load environment variables from a .env file if it exists
load_dotenv()

class Config:
    """
    Process-level settings.

    Everything here is read from environment variables so that a run can be
    reproduced from a `.env` file next to the run configuration. Values given
    on the command line override these.
    """

    RUN_DIR = os.getenv("DCGEN_RUN_DIR", "runs/default")
    LOG_LEVEL = os.getenv("DCGEN_LOG_LEVEL", "INFO")
    JOBS = int(os.getenv("DCGEN_JOBS", "1"))
    SEED = int(os.getenv("DCGEN_SEED", "13"))

    # Artifact file names inside a run directory
    ARTIFACTS = {
        "vocab": "vocab.txt",
        "hmmlda": "hmmlda.txt",
        "word_topic_stats": "word_topic_stats.tsv",
        "sif": "sif.txt",
        "word_vectors": "word_vectors.txt",
        "lm_forward_ngram": "lm_forward.ngram",
        "lm_forward_lex": "lm_forward.lex",
        "lm_reverse_ngram": "lm_reverse.ngram",
        "lm_reverse_lex": "lm_reverse.lex",
        "run_config": "run.ini",
    }

    @staticmethod
    def get_artifact_name(key):
        """
        Returns the file name of a named artifact.
        Raises KeyError for unknown artifact keys.
        """
        return Config.ARTIFACTS[key]
