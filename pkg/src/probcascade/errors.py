"""Exception and warning types shared across the package."""


class DataError(ValueError):
    """Input data violates a format or structural contract."""


class MalformedLine(DataError):
    def __init__(self, line_no, detail=""):
        self.line_no = line_no
        msg = f"line {line_no}: malformed"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NonMonotoneFeatureIds(DataError):
    def __init__(self, line_no):
        self.line_no = line_no
        super().__init__(f"line {line_no}: feature ids must be strictly increasing")


class NegativeValue(DataError):
    def __init__(self, line_no):
        self.line_no = line_no
        super().__init__(f"line {line_no}: negative feature value")


class EmptyInput(DataError):
    pass


class MultipleRoots(DataError):
    pass


class CycleDetected(DataError):
    pass


class DuplicateParent(DataError):
    pass


class UnknownNode(DataError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


class EmptyCorpus(DataError):
    pass


class NonLeafLabel(DataError):
    pass


class LengthMismatch(DataError):
    pass


class RootHasNoTrainingSet(DataError):
    pass


class ModelStrategyMismatch(DataError):
    pass


class NonFiniteLoss(ArithmeticError):
    """The logistic objective became NaN or infinite during training."""


class SingleClassDataWarning(UserWarning):
    """A node's training set holds only one class; a constant classifier was used."""


class EmptyTrainingSetWarning(UserWarning):
    """A node had no training examples at all; the zero classifier was used."""
