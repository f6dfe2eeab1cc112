"""Speculative beam search for simultaneous (streaming) sequence decoding."""
from .beam import SearchStats, beam_search_full, greedy_decode, next_multi, next_step
from .core import (EOS, EOS_ID, DecodeTrace, Hypothesis, Vocab, compare_hypotheses,
                   split_traces)
from .metrics import (LatencyInputs, average_lagging, consecutive_wait, corpus_bleu,
                      sequence_logprob)
from .oracle import enumerate_best, enumerate_lookahead
from .policy import (READ, WRITE, Action, Schedule, ThresholdAdaptive, WaitK, chunk_lengths,
                     load_schedule, wait_k_actions)
from .sbs import (SbsConfig, chunk_beam_search, chunk_sbs, full_sentence_sbs, sbs_step,
                  simul_decode, tail_beam_search)
from .scorer import (HashModel, Scorer, TabularModel, available_backends, default_backend,
                     hash_model_logits, load_tabular_model)

__version__ = "0.1.0"
