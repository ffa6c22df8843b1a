"""Mock authoritative name servers with EDNS-PR cache population."""

from .delay import DelayDistribution
from .edns import EDNS_PR_CODE, EdnsPrError, EdnsPrOption, attach, find_option
from .ledger import ALLOW, REQUIRE_PROOF, PopulationLedger, reflection_guard
from .proof import FRESHNESS_MS, MissProof, ProofVerdict, verify_miss_proof
from .server import AnsConfig, AnsServer, PopulateDispatcher, ServeInfo
from .zone import Zone, ZoneError, ZoneRecord

__all__ = [
    "DelayDistribution", "EDNS_PR_CODE", "EdnsPrError", "EdnsPrOption", "attach", "find_option",
    "ALLOW", "REQUIRE_PROOF", "PopulationLedger", "reflection_guard", "FRESHNESS_MS", "MissProof",
    "ProofVerdict", "verify_miss_proof", "AnsConfig", "AnsServer", "PopulateDispatcher", "ServeInfo",
    "Zone", "ZoneError", "ZoneRecord",
]
