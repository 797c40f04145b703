"""Field-sweep campaigns: configuration, trace files, tracking, replay and reports."""
from .config import CampaignConfig, FieldAxis, ScanWindows, load_config, parse_config
from .io import format_trace, ingest_trace, write_trace
from .report import ResonatorReport, build_report, format_report, report_document
from .runner import (CampaignResult, run_campaign_mode, run_field_campaign, simulated_source,
                     write_results)
from .sources import ReplaySource, ScanRequest, SimulatedSource
from .tracking import AuditLog, TrackedResonance, track_resonance

__all__ = [
    "CampaignConfig", "FieldAxis", "ScanWindows", "load_config", "parse_config", "format_trace",
    "ingest_trace", "write_trace", "ResonatorReport", "build_report", "format_report",
    "report_document", "CampaignResult", "run_campaign_mode", "run_field_campaign",
    "simulated_source", "write_results", "ReplaySource", "ScanRequest", "SimulatedSource",
    "AuditLog", "TrackedResonance", "track_resonance",
]
