from .config import ConfigError, ExperimentConfig, parse_config
from .campaigns import CAMPAIGNS, CampaignResult, InvariantViolation, run_campaign
from .io import write_outputs
