"""PIR-compatible DNS cache: record codec, slots and the slot table."""

from .record import A, AAAA, IN, NS, RecordError, RecordWire, canonical_name, decode_record, encode_record, name_digest
from .slot import Lookup, Slot, SlotOverflowError, find, insert
from .store import CacheConfig, PlainCache, domain_index, plain_lookup_oracle

__all__ = [
    "A", "AAAA", "IN", "NS", "RecordError", "RecordWire", "canonical_name", "decode_record",
    "encode_record", "name_digest", "Lookup", "Slot", "SlotOverflowError", "find", "insert",
    "CacheConfig", "PlainCache", "domain_index", "plain_lookup_oracle",
]
