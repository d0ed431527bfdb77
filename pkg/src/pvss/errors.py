"""Exception hierarchy shared across the pvss package."""


class PvssError(Exception):
    """Base class for all pvss errors."""


class RejectedShortTrack(PvssError):
    """Track shorter than the minimum length was offered for ingest."""


class DimensionMismatch(PvssError):
    """A feature vector does not match the configured dimensionality."""


class OutOfOrderTimestamp(PvssError):
    """Ingest saw a timestamp earlier than the camera table tail."""


class UnknownCamera(PvssError):
    """Camera id is not registered in the store or graph."""


class UnknownTrack(PvssError):
    """Track reference does not resolve to a stored track."""


class DuplicateTrack(PvssError):
    """(camera_id, vehicle_id) already present in the store."""


class InvalidTrack(PvssError):
    """Track metadata violates a structural invariant."""


class FormatError(PvssError):
    """Persisted file has a bad header or malformed record."""


class DanglingEdge(PvssError):
    """Edge references a camera that is not a graph node."""


class DuplicateCamera(PvssError):
    """Camera id appears twice in a topology description."""


class NonPositiveDistance(PvssError):
    """Edge spatial distance must be strictly positive."""


class UnknownEdge(PvssError):
    """(from, to) pair is not an edge of the graph."""


class NonPositiveCost(PvssError):
    """Transit record with cost_s <= 0."""


class UnreachablePair(PvssError):
    """No path between two cameras in the (undirected) graph."""


class EmptySequence(PvssError):
    """Pooling was given no vectors."""


class EmptyLevel(PvssError):
    """Index build requested on a level with no features."""


class ZeroVector(PvssError):
    """Cosine similarity of an all-zero vector is undefined."""


class LevelNotBuilt(PvssError):
    """knn requested before the index level was built."""


class OutOfRangeScore(PvssError):
    """Similarity score outside [0, 1]."""


class SingleClassData(PvssError):
    """Fusion training requires both positive and negative pairs."""


class DivergedLoss(PvssError):
    """Training loss became non-finite."""


class EmptyScope(PvssError):
    """Query spatial scope resolves to no cameras."""


class IndexNotBuilt(PvssError):
    """Search requested before index construction."""


class EmptyQuerySet(PvssError):
    """Evaluation over zero queries."""


class NoGroundTruth(PvssError):
    """Average precision of a query with zero ground truths."""


class InfeasibleSpec(PvssError):
    """Synthetic world parameters cannot be realized."""
