from .main import EXIT_ABORT, EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser, main, run
from .manifest import MANIFEST_FILE, MANIFEST_ID_KEY, RunManifest, read_manifest
from .verify import CheckResult, VerifyReport, VerifySuite

__all__ = [
    "CheckResult",
    "EXIT_ABORT",
    "EXIT_FAILURE",
    "EXIT_OK",
    "EXIT_USAGE",
    "MANIFEST_FILE",
    "MANIFEST_ID_KEY",
    "RunManifest",
    "VerifyReport",
    "VerifySuite",
    "build_parser",
    "main",
    "run",
]
