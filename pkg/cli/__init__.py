from .commands import build_parser, main, evaluate_checkpoint, run_ablation_cell, final_quartile_mean
