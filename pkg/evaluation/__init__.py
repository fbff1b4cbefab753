"""Evaluation

Sampled leave-one-out ranking metrics
"""
from evaluation.metrics import hr_at_k, ndcg_at_k, rank_of_truth
from evaluation.evaluator import EvalReport, evaluate, score_last_position
