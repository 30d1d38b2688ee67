class PropclassError(Exception):
    """Base class for every error raised by propclass."""


class ConfigError(PropclassError):
    """The run was configured or invoked incorrectly."""

    def __init__(self, msg):
        self.msg = msg
        super().__init__(self.__str__())

    def __str__(self):
        return f"Invalid configuration: {self.msg}"


class InvalidParameter(ConfigError):
    """A parameter object failed validation."""

    def __init__(self, name, value, requirement):
        self.name = name
        self.value = value
        self.requirement = requirement
        super().__init__(f"{name}={value!r} ({requirement})")


class DataError(PropclassError):
    """Input data cannot be used."""


class InputNotFound(DataError):
    """An input file does not exist."""

    def __init__(self, path):
        self.path = path
        super().__init__(self.__str__())

    def __str__(self):
        return f"Input file not found: {self.path}"


class MalformedHeader(DataError):
    """A CSV header does not match the expected columns."""

    def __init__(self, expected, got):
        self.expected = tuple(expected)
        self.got = tuple(got)
        super().__init__(self.__str__())

    def __str__(self):
        msg = ["Unexpected CSV header\n"]
        msg.append(f"Expected: {','.join(self.expected)}")
        msg.append(f"Got:      {','.join(str(c) for c in self.got)}")
        return "\n".join(msg)


class MalformedRow(DataError):
    """A listing row does not have the expected number of fields."""

    def __init__(self, expected, got, line=None):
        self.expected = expected
        self.got = got
        self.line = line
        super().__init__(self.__str__())

    def __str__(self):
        where = f" (line {self.line})" if self.line is not None else ""
        return f"Malformed row{where}: expected {self.expected} fields, got {self.got}"


class MalformedField(DataError):
    """A listing field could not be parsed."""

    def __init__(self, name, value, reason, line=None):
        self.name = name
        self.value = value
        self.reason = reason
        self.line = line
        super().__init__(self.__str__())

    def __str__(self):
        where = f" (line {self.line})" if self.line is not None else ""
        return f"Malformed field '{self.name}'{where}: {self.value!r} - {self.reason}"


class MalformedPrice(MalformedField):
    """A price string is not a Rupiah amount."""

    def __init__(self, text, reason, line=None):
        super().__init__("price", text, reason, line=line)


class EmptyDataset(DataError):
    """No listings are left to work with."""

    def __init__(self, summary=None):
        self.summary = summary
        super().__init__(self.__str__())

    def __str__(self):
        msg = ["Dataset is empty"]
        if self.summary is not None:
            msg.append(
                f"Removed: duplicates={self.summary.duplicates_removed}"
                f"  invalid={self.summary.invalid_removed}"
                f"  malformed={self.summary.malformed_removed}"
            )
        return "\n".join(msg)


class EmptyTrainingSet(DataError):
    """A model or normalizer was fitted on zero instances."""

    def __str__(self):
        return "Training set is empty"


class ClassTooSmall(DataError):
    """A price class cannot be represented in both partitions."""

    def __init__(self, price_class, count, n_train=None):
        self.price_class = price_class
        self.count = count
        self.n_train = n_train
        super().__init__(self.__str__())

    def __str__(self):
        msg = [
            f"Class {self.price_class} is too small to split: "
            f"{self.count} instance(s)"
        ]
        if self.n_train is not None:
            msg.append(
                f"Train would take {self.n_train}, test {self.count - self.n_train}"
            )
        return "\n".join(msg)


class AllZeroCounts(DataError):
    """Impurity is undefined for an empty node."""

    def __init__(self, counts):
        self.counts = counts
        super().__init__(self.__str__())

    def __str__(self):
        return f"Class counts are all zero: {list(self.counts)}"


class MissingFeature(DataError):
    """An instance lacks a feature the model needs."""

    def __init__(self, name):
        self.name = name
        super().__init__(self.__str__())

    def __str__(self):
        return f"Instance is missing feature '{self.name}'"


class InsufficientData(DataError):
    """Fewer stored instances than neighbors requested."""

    def __init__(self, available, k):
        self.available = available
        self.k = k
        super().__init__(self.__str__())

    def __str__(self):
        return (
            f"k-NN needs at least k={self.k} training instances, got {self.available}"
        )


class LengthMismatch(DataError):
    """Truth and prediction sequences differ in length."""

    def __init__(self, n_truths, n_preds):
        self.n_truths = n_truths
        self.n_preds = n_preds
        super().__init__(self.__str__())

    def __str__(self):
        return f"Length mismatch: {self.n_truths} truths vs {self.n_preds} predictions"


class EmptyInput(DataError):
    """Nothing to accumulate."""

    def __str__(self):
        return "No (truth, prediction) pairs given"


class EmptyMatrix(DataError):
    """A confusion matrix with zero total has no accuracy."""

    def __str__(self):
        return "Confusion matrix is empty"


class TestSetMismatch(DataError):
    """Two reports were computed on different test sets."""

    __test__ = False  # keep pytest from collecting this class

    def __init__(self, fingerprint_a, fingerprint_b):
        self.fingerprint_a = fingerprint_a
        self.fingerprint_b = fingerprint_b
        super().__init__(self.__str__())

    def __str__(self):
        msg = ["Reports were evaluated on different test sets\n"]
        msg.append(f"a: {self.fingerprint_a}")
        msg.append(f"b: {self.fingerprint_b}")
        return "\n".join(msg)


class ModelFormatError(DataError):
    """A serialized model or report could not be read."""

    def __init__(self, source, reason):
        self.source = source
        self.reason = reason
        super().__init__(self.__str__())

    def __str__(self):
        return f"Cannot load {self.source}: {self.reason}"


class StageError(PropclassError):
    """A pipeline stage failed."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(self.__str__())

    def __str__(self):
        return f"Stage '{self.stage}' failed: {self.cause}"
