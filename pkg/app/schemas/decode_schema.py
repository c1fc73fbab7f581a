from marshmallow import EXCLUDE, Schema, fields, post_load

from app.services.decoder_service import Candidate


class CandidateSchema(Schema):
    """One scored response; `total` is the constrained beam score."""
    tokens = fields.List(fields.Str(), required=True)
    ids = fields.List(fields.Int(), load_default=list)
    loglik = fields.Float(required=True, allow_none=True)
    topic_score = fields.Float(load_default=0.0)
    semantic_score = fields.Float(load_default=0.0)
    bias = fields.Float(load_default=0.0)
    reverse_score = fields.Float(allow_none=True, load_default=None)
    rerank_score = fields.Float(allow_none=True, load_default=None)
    total = fields.Float(required=True, allow_none=True)
    finished = fields.Boolean(load_default=True)

    class Meta:
        unknown = EXCLUDE

    @post_load
    def make_candidate(self, data, **kwargs):
        data["tokens"] = tuple(data["tokens"])
        data["ids"] = tuple(data["ids"])
        return Candidate(**data)


class DecodeRecordSchema(Schema):
    """One line of decode output: the input, its reference if known, and the ranked candidates."""
    source = fields.List(fields.Str(), required=True)
    reference = fields.List(fields.Str(), allow_none=True, load_default=None)
    system = fields.Str(allow_none=True, load_default=None)
    flagged = fields.Boolean(load_default=False)
    candidates = fields.List(fields.Nested(CandidateSchema), required=True)

    class Meta:
        unknown = EXCLUDE


candidate_schema = CandidateSchema()
decode_record_schema = DecodeRecordSchema()
