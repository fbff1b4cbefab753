"""Constants

Constants for ingestion, preprocessing and synthetic data
"""

CSV_COLUMNS = ("user_id", "item_id", "timestamp")

# Benchmark corpora: (min_user, min_item, date_range)
PRESETS = {
    "beauty": (5, 5, ("2011-01-01", "2014-12-31")),
    "video": (5, 5, ("2011-01-01", "2014-12-31")),
    "book": (30, 20, ("2011-01-01", "2013-12-31")),
    "steam": (10, 5, ("2014-01-01", "2016-12-31")),
}

DATASET_FORMAT_VERSION = 1

# Synthetic corpus defaults
SYNTH_NUM_USERS = 2000
SYNTH_NUM_ITEMS = 500
SYNTH_HORIZON_DAYS = 365
SYNTH_NUM_TRENDS = 24
SYNTH_TREND_WINDOW = 30
SYNTH_P_TREND = 0.7
SYNTH_SHARPNESS = 1.0
SYNTH_MIN_EVENTS = 5
SYNTH_MAX_EVENTS = 30
SYNTH_MEAN_GAP_DAYS = 5.0
SYNTH_TREND_POOL_SIZE = 20
SYNTH_NUM_SUCCESSORS = 4
SYNTH_MARKOV_GAP_DAYS = 7
SYNTH_START_TIMESTAMP = 1_293_840_000  # 2011-01-01 UTC
