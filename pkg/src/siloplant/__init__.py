"""Four-silo batch plant: simulator, scan-cycle runtime, orchestration and tooling."""

__version__ = "0.1.0"
