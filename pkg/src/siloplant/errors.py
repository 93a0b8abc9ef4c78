"""Error types shared across the package.

Every rejection carries a stable machine-readable ``code`` so the HTTP edge
and the tests can branch on it without parsing messages.
"""


class SiloPlantError(Exception):
    """Base class; ``code`` identifies the rejection reason."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class ConfigError(SiloPlantError):
    """Invalid plant / runtime configuration."""

    def __init__(self, message: str, code: str = "CONFIG"):
        super().__init__(code, message)


class RegistrationError(SiloPlantError):
    """Component registration rejected (DUPLICATE_ORDER_KEY, RUNTIME_ALREADY_STARTED)."""


class PortError(SiloPlantError):
    """Port wiring rejected (INCOMPATIBLE_INTERFACES, PORT_ALREADY_BOUND, PORT_NOT_BOUND)."""


class CommandRejected(SiloPlantError):
    """Controller command rejected (BUSY, UNSUPPORTED)."""


class ResourceError(SiloPlantError):
    """Common-resource misuse (DUPLICATE_REQUEST, NOT_HOLDER)."""


class ProcessError(SiloPlantError):
    """Process lifecycle rejected (SILOS_BUSY, UNKNOWN_PROCESS, ALREADY_DONE, VALIDATION)."""


class ServiceError(SiloPlantError):
    """Control-service edge rejection (VALIDATION, CONFLICT, SERVICE_NOT_READY)."""
