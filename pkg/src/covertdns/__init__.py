"""Detection and attribution of DGA-driven DNS over encrypted transports.

Resolver response sizes leak through DoH and DoT. This package simulates
such traffic, reads it from pcap captures, fingerprints the size series
with an AR fit on its Hodrick-Prescott trend, and flags suspicious flows.
"""

__version__ = "0.1.0"

from .capture import FlowFilter, PacketRecord, SizeStats, extract_flows, extract_size_series, parse_pcap, size_stats
from .detect import DetectionConfig, DetectionReport, Verdict, analyze, analyze_flows, detect_dot_pattern, detect_static_length
from .domainsets import DomainRecord, DomainSet, FamilyLengthModel, family_length_model, generate_parametric, load_domain_list
from .ioc import IocConfig, IocDatabase, anova, build_ioc, duncan_grouping, load_db, match_ioc, min_observations, save_db
from .series import SizeSeries, read_series
from .trafficsim import ResponseSizeModel, SimSession, TransportMode, family_session, response_model, simulate_session, write_pcap
from .tsa import ArmaIoc, autocorrelation, fit_ar, hp_filter
