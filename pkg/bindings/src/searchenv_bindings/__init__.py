"""Foreign-callable environment API over the searchenv session runner.

The boundary speaks only serialized forms: refinement strings in,
flat-string and layered-record observations out, episode records as JSON
strings. One handle hosts at most one active episode; errors carry one of
the structured codes PARSE_ERROR, NO_EPISODE, DONE.

    handle = open(index_dir, {"step_cap": 10})
    obs = handle.reset("who sang it", ["somebody"])
    payload = handle.step('+(contents:"somebody")')
    record_json = handle.close()
"""

from __future__ import annotations

from searchenv.cli import load_index
from searchenv.corpus import QaPair
from searchenv.env import EnvConfig, SearchEnv
from searchenv.observation import serialize_flat, serialize_layered
from searchenv.queries import QueryParseError, parse_refinement
from searchenv.reader import DEFAULT_WINDOW
from searchenv.scoring import RewardConfig
from searchenv.session import AgentContractError, EpisodeConfig, EpisodeDriver, record_to_json

PARSE_ERROR = "PARSE_ERROR"
NO_EPISODE = "NO_EPISODE"
DONE = "DONE"

__all__ = ["BindingsError", "EnvHandle", "open", "open_env", "PARSE_ERROR", "NO_EPISODE", "DONE"]


class BindingsError(RuntimeError):
    """Error with a structured code for non-Python callers."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code

    def to_payload(self) -> dict:
        return {"code": self.code, "message": str(self)}


def _env_config(config: dict | None) -> tuple[EnvConfig, EpisodeConfig, str]:
    config = dict(config or {})
    reward = RewardConfig(
        k=int(config.get("k", 5)),
        empty_result_penalty=float(config.get("empty_result_penalty", -1.0)),
        immediate_stop_penalty=float(config.get("immediate_stop_penalty", -1.0)),
        discount=float(config.get("discount", 0.9)),
    )
    env_cfg = EnvConfig(
        k=int(config.get("k", 5)),
        window_size=int(config.get("window_size", DEFAULT_WINDOW)),
        reward=reward,
    )
    episode_cfg = EpisodeConfig(
        step_cap=int(config.get("step_cap", 10)),
        stop_on_no_new_docs=bool(config.get("stop_on_no_new_docs", False)),
        record_states=bool(config.get("record_states", True)),
    )
    return env_cfg, episode_cfg, str(config.get("agent_label", "external"))


class EnvHandle:
    """One environment instance; exactly one active episode at a time."""

    def __init__(self, env: SearchEnv, episode_cfg: EpisodeConfig, agent_label: str):
        self._env = env
        self._episode_cfg = episode_cfg
        self._agent_label = agent_label
        self._driver: EpisodeDriver | None = None
        self._stop_terms = env.index.common_terms(50)

    # -- episode lifecycle ---------------------------------------------------

    def reset(self, question: str, answers=None) -> dict:
        """Start a fresh episode (discarding any active one); runs the base query."""
        qa = QaPair(question=question, answers=tuple(answers) if answers else ())
        self._driver = EpisodeDriver(qa, self._env, self._episode_cfg, agent_label=self._agent_label)
        return self.observe()

    def observe(self) -> dict:
        driver = self._require_episode()
        observation = driver.session.observation()
        layered = serialize_layered(observation, self._env.index, self._stop_terms)
        return {"flat": serialize_flat(observation), "layered": layered.to_dict()}

    def step(self, refinement_string: str) -> dict:
        """Advance the episode by one rendered refinement ('' means STOP)."""
        driver = self._require_episode()
        if driver.done:
            raise BindingsError(DONE, "episode is finished; reset or close the handle")
        try:
            refinement = parse_refinement(refinement_string)
        except QueryParseError as exc:
            raise BindingsError(PARSE_ERROR, str(exc)) from exc
        try:
            if refinement.is_stop:
                reward = driver.record_stop()
            else:
                reward = driver.apply(refinement)
        except AgentContractError as exc:
            raise BindingsError(PARSE_ERROR, str(exc)) from exc
        payload = self.observe()
        return {"observation": payload, "reward": reward, "done": driver.done}

    def close(self) -> str:
        """Finish the episode and return its record as one JSONL line."""
        driver = self._require_episode()
        record = driver.finish()
        self._driver = None
        return record_to_json(record)

    def _require_episode(self) -> EpisodeDriver:
        if self._driver is None:
            raise BindingsError(NO_EPISODE, "no active episode; call reset first")
        return self._driver


def open(index_path: str, config: dict | None = None) -> EnvHandle:
    """Load an index directory produced by `searchenv index build` and wrap it."""
    env_cfg, episode_cfg, agent_label = _env_config(config)
    index = load_index(str(index_path))
    return EnvHandle(SearchEnv(index, env_cfg), episode_cfg, agent_label)


open_env = open
