"""Scenario-driven multi-agent behavior engine for a tour guide robot.

The pipeline: generate a tagged scenario for an exhibit (or load one),
validate its tags against the action registry, compile the text into a
timed event stream, and execute that stream over a hierarchical agent
forest that arbitrates conflicts by priority and position, returns agents
to default behavior, and fills long idle stretches with background
actions. Runs are deterministic and emit structured traces.
"""

from .agents import (
    ActionInstance,
    ActionRequest,
    ActionSpec,
    Activity,
    AgentNode,
    ArbitrationDecision,
    Forest,
    Verdict,
)
from .cache import ScenarioCache, param_distance
from .dispatch import (
    AgentDecl,
    Dispatcher,
    ForestConfig,
    SceneConfig,
    build_forest,
    dump_forest_config,
    load_forest_config,
)
from .errors import (
    ArityMismatchError,
    ConfigError,
    DuplicateActionError,
    InvalidDefinitionError,
    LengthViolationError,
    NarrativeMutatedError,
    NoArmAvailableError,
    NoScenarioError,
    ParamValidationError,
    ParseError,
    ProviderError,
    ProviderUnavailableError,
    TourbotError,
    TypeMismatchError,
    UnknownActionError,
    UnknownAgentError,
    UnroutableActionError,
)
from .generation import (
    ExhibitDescription,
    generate_narrative,
    generate_scenario,
    insert_tags,
    load_exhibit,
)
from .mentor1 import (
    DelayVerdict,
    ExhibitTarget,
    LimbState,
    RobotProfile,
    delay_policy,
    mentor1_forest,
    mentor1_profile,
    mentor1_registry,
    resolve_pointing,
    tag_examples,
)
from .priorities import Priority, command_priority
from .providers import HttpChatProvider, ProviderRequest, ProviderResponse, StubProvider
from .registry import (
    ActionDefinition,
    ActionRegistry,
    DurationClass,
    ParamKind,
    ParamSpec,
    dump_registry,
    load_registry,
    validate_params,
)
from .scenario import (
    ActionTag,
    GenerationParams,
    SanitizationReport,
    ScenarioDocument,
    parse_scenario,
    render_scenario,
    sanitize,
)
from .simulator import SimClock, Simulation, run, run_scenario
from .timeline import SpeechModel, TimelineEvent, compile_timeline
from .trace import Trace, TraceRecord, background_derived_indices, trace_diff

__version__ = "0.1.0"
