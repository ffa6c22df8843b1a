"""Single-server stateless PIR over a reference LWE scheme."""

from .lwe import Ciphertext, NoiseOverflowError, dec, enc, eval_add, eval_pt_mul
from .params import LweParams, ParameterError, ensure_serviceable, noise_margin
from .scheme import (
    EncodedCache,
    OpCounter,
    PirError,
    PirQuery,
    PirResponse,
    PublicKey,
    QueryKey,
    answer,
    extract,
    hot_index,
    index,
    new_encoded_cache,
    query,
    setup_server,
    setup_user,
)

__all__ = [
    "Ciphertext", "NoiseOverflowError", "dec", "enc", "eval_add", "eval_pt_mul",
    "LweParams", "ParameterError", "ensure_serviceable", "noise_margin",
    "EncodedCache", "OpCounter", "PirError", "PirQuery", "PirResponse", "PublicKey",
    "QueryKey", "answer", "extract", "hot_index", "index", "new_encoded_cache",
    "query", "setup_server", "setup_user",
]
