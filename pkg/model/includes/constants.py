"""Constants

Head kinds and checkpoint layout
"""

ABS_TIME = "abs_time"
ABS_POS = "abs_pos"
REL_TIME = "rel_time"
REL_POS = "rel_pos"
CONTENT = "content"

HEAD_KINDS = (ABS_TIME, ABS_POS, REL_TIME, REL_POS, CONTENT)
ABSOLUTE_HEADS = (ABS_TIME, ABS_POS)
RELATIVE_HEADS = (REL_TIME, REL_POS)
DEFAULT_HEAD_PLAN = (ABS_TIME, ABS_POS, REL_TIME, REL_POS)

FFN_MULTIPLIER = 4

CHECKPOINT_FORMAT_VERSION = 2
MANIFEST_KEY = "__manifest__"
