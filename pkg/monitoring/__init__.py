from .metrics_recorder import MetricsRecorder, METRIC_FIELDS, read_metrics
from .series_export import (
    SERIES, UnknownSeriesError, discover_runs, load_series, t_interval, export_series
)
