class IstspError(Exception):
    """Base class for pipeline errors; ``stage`` names where it happened."""

    stage = ""


class InvalidInstance(IstspError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class InfeasibleError(IstspError):
    def __init__(self, stage: str, certificate: str):
        self.stage = stage
        self.certificate = certificate
        super().__init__(f"{stage}: infeasible ({certificate})")


class ModelTooLarge(IstspError):
    def __init__(self, estimated: int, budget: int, stage: str = "stage2"):
        self.stage = stage
        self.estimated = estimated
        self.budget = budget
        super().__init__(f"{stage} model too large: ~{estimated} constraints > budget {budget}")
