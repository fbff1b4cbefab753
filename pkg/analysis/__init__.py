"""Analysis

Interval distribution and item overlap ratio
"""
from analysis.temporal import IntervalHistogram, OverlapConfig, OverlapIndex, average_overlap, \
    interval_distribution, overlap_curve, overlap_ratio, top_users, user_overlaps, \
    write_interval_csv, write_overlap_csv, write_summary_json
