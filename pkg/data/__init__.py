"""Data

Interaction ingestion, preprocessing, sequences and synthetic corpora
"""
from data.interactions import Interaction, day_index, load_interactions, read_frame, \
    write_interactions
from data.dataset import Dataset, dataset_stats, load_dataset, preprocess, save_dataset, \
    write_stats
from data.sequences import Batch, BatchPrefetcher, EvalInstance, EvalSet, build_eval_set, \
    build_sequences, iterate_batches, make_eval_instance
from data.sampling import sample_negatives, user_rng
from data.synth import SynthConfig, SynthGenerator, synth_generate
