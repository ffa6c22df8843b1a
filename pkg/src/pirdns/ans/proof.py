"""Cache-miss proofs: a resolver-signed PIR transcript plus the backup key that opens it.

Serialized as magic ``PMPF``, version u8, then u32-length-prefixed
sections in this order: query, response, backup key, resolver signature,
client IP, timestamp (u64), domain, rtype (u16). The backup key section
is the JSON parameter set, a NUL byte, then the secret as LE u32 words.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey

from ..cache.record import A, RecordError, canonical_name, name_digest
from ..cache.slot import Slot
from ..pir import wire
from ..pir.lwe import NoiseOverflowError
from ..pir.params import LweParams, ParameterError
from ..pir.scheme import PirError, QueryKey, extract, hot_index, index
from ..resolver.signing import TranscriptSignature

MAGIC = b"PMPF"
VERSION = 1
FRESHNESS_MS = 60_000

VALID = "valid"
BAD_SIGNATURE = "bad-signature"
IP_MISMATCH = "ip-mismatch"
STALE = "stale"
WRONG_INDEX = "wrong-index"
NOT_A_MISS = "not-a-miss"
MALFORMED = "malformed"


class ProofFormatError(ValueError):
    pass


def dump_query_key(qk: QueryKey) -> bytes:
    meta = json.dumps(qk.params.to_dict(), sort_keys=True).encode()
    return meta + b"\0" + np.ascontiguousarray(qk.secret, dtype="<u4").tobytes()


def load_query_key(data: bytes) -> QueryKey:
    meta, _, raw = bytes(data).partition(b"\0")
    try:
        params = LweParams.from_dict(json.loads(meta))
    except (ValueError, TypeError, ParameterError) as exc:
        raise ProofFormatError(f"bad key parameters: {exc}") from exc
    if len(raw) != 4 * params.n:
        raise ProofFormatError("secret length does not match n")
    return QueryKey(np.frombuffer(raw, dtype="<u4").astype(np.uint32), params)


@dataclass(frozen=True)
class MissProof:
    q: bytes
    r: bytes
    backup_qk: QueryKey
    rer_sig: TranscriptSignature
    client_ip: str
    timestamp_ms: int
    domain: str
    rtype: int = A

    def to_bytes(self) -> bytes:
        sections = [
            self.q, self.r, dump_query_key(self.backup_qk), self.rer_sig.to_bytes(),
            self.client_ip.encode(), struct.pack("!Q", self.timestamp_ms),
            self.domain.encode(), struct.pack("!H", self.rtype),
        ]
        out = [MAGIC, struct.pack("!B", VERSION)]
        for sec in sections:
            out += [struct.pack("!I", len(sec)), sec]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "MissProof":
        if data[:4] != MAGIC or len(data) < 5 or data[4] != VERSION:
            raise ProofFormatError("bad proof header")
        off, secs = 5, []
        while off < len(data):
            if off + 4 > len(data):
                raise ProofFormatError("truncated section length")
            (n,) = struct.unpack_from("!I", data, off)
            off += 4
            if off + n > len(data):
                raise ProofFormatError("truncated section")
            secs.append(data[off:off + n])
            off += n
        if len(secs) != 8:
            raise ProofFormatError(f"expected 8 sections, got {len(secs)}")
        try:
            return cls(
                q=secs[0], r=secs[1], backup_qk=load_query_key(secs[2]),
                rer_sig=TranscriptSignature.from_bytes(secs[3]), client_ip=secs[4].decode(),
                timestamp_ms=struct.unpack("!Q", secs[5])[0], domain=secs[6].decode(),
                rtype=struct.unpack("!H", secs[7])[0],
            )
        except (struct.error, UnicodeDecodeError, ValueError) as exc:
            raise ProofFormatError(str(exc)) from exc


@dataclass(frozen=True)
class ProofVerdict:
    valid: bool
    reason: str = VALID


def verify_miss_proof(proof: MissProof, expected_domain: str, now_ms: int, rer_key: Ed25519PublicKey,
                      expected_ip: str | None = None, not_before_ms: int | None = None,
                      freshness_ms: int = FRESHNESS_MS) -> ProofVerdict:
    """Check the four clauses in order; the first failure names the reason."""
    # (a) the resolver really produced this transcript for this client at this time
    if not proof.rer_sig.verify(rer_key):
        return ProofVerdict(False, BAD_SIGNATURE)
    if not proof.rer_sig.binds(proof.client_ip, proof.timestamp_ms, proof.q, proof.r):
        return ProofVerdict(False, BAD_SIGNATURE)
    if expected_ip is not None and proof.client_ip != expected_ip:
        return ProofVerdict(False, IP_MISMATCH)
    # (b) freshness, and no transcripts older than the challenge they answer
    if abs(now_ms - proof.timestamp_ms) > freshness_ms:
        return ProofVerdict(False, STALE)
    if not_before_ms is not None and proof.timestamp_ms < not_before_ms:
        return ProofVerdict(False, STALE)
    qk = proof.backup_qk
    try:
        q = wire.load_query(proof.q)
        r = wire.load_response(proof.r)
        # (c) the query selects the slot of the expected domain
        if canonical_name(proof.domain) != canonical_name(expected_domain):
            return ProofVerdict(False, WRONG_INDEX)
        hot = hot_index(qk, q)
        if hot is None or hot != index(canonical_name(expected_domain), qk.params.n_slots):
            return ProofVerdict(False, WRONG_INDEX)
        # (d) the slot it returned had no live record for the domain at signing time
        slot = Slot.from_bytes(extract(qk, r))
    except NoiseOverflowError:
        return ProofVerdict(False, WRONG_INDEX)
    except (PirError, RecordError, ValueError):
        return ProofVerdict(False, MALFORMED)
    if slot.find(name_digest(expected_domain), proof.rtype, proof.timestamp_ms).hit:
        return ProofVerdict(False, NOT_A_MISS)
    return ProofVerdict(True, VALID)
