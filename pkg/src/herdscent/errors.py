class DuplicatePostError(Exception):
    """Raised when two corpus records share the same post id"""


class UnknownEdgeKindError(Exception):
    """Raised when a record names an edge kind outside post/repost/reply/mention/follow/friendship"""


class EdgeNotInGraphError(Exception):
    """Raised when a content edge id does not belong to the queried graph"""


class EmptyTermListError(Exception):
    """Raised when term frequencies are requested for an empty term list"""


class UnknownTermError(Exception):
    """Raised when a term is not registered in the vocabulary"""


class EmptyInterestsError(Exception):
    """Raised when keywords and profile text normalize to no terms at all"""


class TooManyCentroidsError(Exception):
    """Raised when k exceeds the number of posts with a non-empty vector"""


class InvalidPositionError(Exception):
    """Raised when a position does not map to a content edge. Positions must be in a range [1,m]"""


class EmptyPathError(Exception):
    """Raised when the fitness of a surfing path without edges is requested"""


class PopulationConstraintError(Exception):
    """Raised when dist_clan or dist_elephant cannot be honored for the requested population"""


class SnapshotMissingError(Exception):
    """Raised when a clustering snapshot is required but was not found"""


class SnapshotFormatError(Exception):
    """Raised when a clustering snapshot is unreadable or was built from another corpus"""


class MalformedCorpusError(Exception):
    """Raised when more than 10% of the corpus lines cannot be parsed"""


class UnknownEngineError(Exception):
    """Raised when an engine name is not one of ehoif, eeholsif, acsif, psoif"""


class ConfigError(Exception):
    """Raised when a configuration file or flag holds an unknown key or an invalid value"""
