"""Study drivers, configuration, reference tables and the HTTP service."""

from .config import StudyConfig, load_config, parse_config_text
from .studies import CSV_HEADER, ReportRow, run_study, rows_to_csv
