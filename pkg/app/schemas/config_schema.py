from marshmallow import Schema, fields, post_load, validate

from app.artifacts.config import Config
from app.artifacts.models.hmm_lda import HmmLdaConfig
from app.artifacts.models.run_config import CorpusConfig, EvalConfig, PathsConfig, SifConfig
from app.services.decoder_service import DecoderConfig
from app.services.lm_service import LmConfig


class PathsSchema(Schema):
    """Input files of a run; model artifacts live in the run directory."""
    pairs = fields.Str(allow_none=True, load_default=None)
    test_pairs = fields.Str(allow_none=True, load_default=None)
    stop_words = fields.Str(allow_none=True, load_default=None)
    word_vectors = fields.Str(allow_none=True, load_default=None)

    @post_load
    def make_config(self, data, **kwargs):
        return PathsConfig(**data)


class CorpusSchema(Schema):
    min_count = fields.Int(load_default=2, validate=validate.Range(min=1, error="min_count must be at least 1."))
    raw = fields.Boolean(load_default=False)
    buckets = fields.Str(load_default="b1:3-6,b2:7-15,b3:16-25")
    per_bucket = fields.Int(load_default=100, validate=validate.Range(min=0))
    seed = fields.Int(load_default=Config.SEED)

    @post_load
    def make_config(self, data, **kwargs):
        return CorpusConfig(**data)


class HmmLdaSchema(Schema):
    K = fields.Int(load_default=50, validate=validate.Range(min=1))
    C = fields.Int(load_default=20, validate=validate.Range(min=2, error="C must be at least 2 (class 0 is the topic class)."))
    alpha_t = fields.Float(allow_none=True, load_default=None)
    beta_t = fields.Float(load_default=0.01, validate=validate.Range(min=0, min_inclusive=False))
    delta_c = fields.Float(load_default=0.01, validate=validate.Range(min=0, min_inclusive=False))
    gamma_c = fields.Float(load_default=0.1, validate=validate.Range(min=0, min_inclusive=False))
    burn_in = fields.Int(load_default=2500, validate=validate.Range(min=1))
    average_last = fields.Int(load_default=1, validate=validate.Range(min=1))
    log_every = fields.Int(load_default=100, validate=validate.Range(min=1))
    seed = fields.Int(load_default=Config.SEED)

    @post_load
    def make_config(self, data, **kwargs):
        return HmmLdaConfig(**data)


class SifSchema(Schema):
    a = fields.Float(load_default=1e-3, validate=validate.Range(min=0, min_inclusive=False))
    dim = fields.Int(load_default=50, validate=validate.Range(min=1))
    seed = fields.Int(load_default=Config.SEED)

    @post_load
    def make_config(self, data, **kwargs):
        return SifConfig(**data)


class LmSchema(Schema):
    order = fields.Int(load_default=3, validate=validate.Range(min=1))
    discount = fields.Float(load_default=0.75, validate=validate.Range(min=0, max=1, min_inclusive=False, max_inclusive=False))
    lambda_lm = fields.Float(load_default=0.6, validate=validate.Range(min=0, max=1))
    em_iterations = fields.Int(load_default=10, validate=validate.Range(min=1))

    @post_load
    def make_config(self, data, **kwargs):
        return LmConfig(**data)


class DecoderSchema(Schema):
    beam_size = fields.Int(load_default=10, validate=validate.Range(min=1, error="Beam size must be at least 1."))
    alpha = fields.Float(load_default=5.0, validate=validate.Range(min=0))
    beta = fields.Float(load_default=2.0, validate=validate.Range(min=0))
    max_len = fields.Int(load_default=20, validate=validate.Range(min=1))
    min_len = fields.Int(load_default=3, validate=validate.Range(min=1))
    constraint_start_step = fields.Int(load_default=2, validate=validate.Range(min=1))
    ta_bias = fields.Float(allow_none=True, load_default=None)
    ta_words = fields.Int(load_default=20, validate=validate.Range(min=0))
    mmi_lambda = fields.Float(load_default=0.0, validate=validate.Range(min=0))
    keep_forward_score = fields.Boolean(load_default=True)
    seed = fields.Int(load_default=Config.SEED)

    @post_load
    def make_config(self, data, **kwargs):
        return DecoderConfig(**data)


class EvalSchema(Schema):
    bootstrap_iterations = fields.Int(load_default=10000, validate=validate.Range(min=1000))
    topic_words_per_topic = fields.Int(load_default=10, validate=validate.Range(min=1))
    seed = fields.Int(load_default=Config.SEED)

    @post_load
    def make_config(self, data, **kwargs):
        return EvalConfig(**data)


# One schema per run-configuration section
SECTION_SCHEMAS = {
    "paths": PathsSchema,
    "corpus": CorpusSchema,
    "hmmlda": HmmLdaSchema,
    "sif": SifSchema,
    "lm": LmSchema,
    "decoder": DecoderSchema,
    "eval": EvalSchema,
}
