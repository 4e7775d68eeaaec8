"""romplots: figure rendering for latentrom run artifacts."""

from .readers import (AuditData, HeatmapData, LatentData, ParseError,
                      read_audit_log, read_heatmap_csv, read_latent_csv)
from .render import plot_heatmap, plot_indicator_fit, plot_latent

__version__ = "0.1.0"
