# Domain services: corpus, topic model, embeddings, likelihood models, decoding, evaluation
