"""Training harness: config parsing with strict key validation, named presets
carrying the shipped hyperparameter tables, the deterministic training loop
with periodic greedy evaluation, CSV metrics, checkpoints, and policy replay
to textual traces."""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import time
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__, nn
from .ac import ActorCriticConfig, MacCAC, MacIAC, MacIAICC, NaiveMacIACC
from .core import MacroEnv, NumericError, rng_streams, trace_decision_line, trace_tick_line
from .envs import make_env
from .envs.schema import schema_hash
from .qlearn import CenDDRQN, DecHDDRQN, MacDecDDRQN, ParallelMacDecDDRQN, QLearnerConfig


class ConfigError(Exception):
    """Unknown key, type mismatch, or missing required key in a run config."""


Q_ALGOS = {
    "dec_hddrqn": DecHDDRQN,
    "cen_ddrqn": CenDDRQN,
    "macdec_ddrqn": MacDecDDRQN,
    "parallel_macdec_ddrqn": ParallelMacDecDDRQN,
}
AC_ALGOS = {
    "mac_iac": MacIAC,
    "mac_cac": MacCAC,
    "naive_mac_iacc": NaiveMacIACC,
    "mac_iaicc": MacIAICC,
}
ENV_IDS = ("capture_target", "box_pushing", "warehouse_a", "toy_chain")
ENV_KEYS = ("n", "primitive", "schema", "fixture")


@dataclass
class RunConfig:
    algo: str
    env: str
    seed: int = 0
    episodes: int = 1000
    eval_period: int = 100
    eval_episodes: int = 10
    gamma: float = 0.95
    out_dir: str = "runs/latest"
    env_params: dict = field(default_factory=dict)
    algo_params: dict = field(default_factory=dict)


@dataclass
class MetricsRow:
    episode: int
    mean_return: float
    stderr: float
    epsilon: float
    wall_clock_s: float


def _algo_config_cls(algo: str):
    if algo in Q_ALGOS:
        return QLearnerConfig
    if algo in AC_ALGOS:
        return ActorCriticConfig
    raise ConfigError(f"unknown algorithm {algo!r}")


def _accepted_algo_keys(algo: str) -> dict[str, type]:
    cls = _algo_config_cls(algo)
    hints = typing.get_type_hints(cls)
    return {
        f.name: hints[f.name]
        for f in dataclasses.fields(cls)
        if f.name != "gamma"
    }


def _coerce(raw: str, hint, key: str):
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if raw.strip().lower() in ("none", "null", ""):
            return None
        hint = args[0]
    try:
        if hint is bool:
            low = raw.strip().lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r} for key {key!r}") from exc


def _coerce_env_value(key: str, raw: str):
    if key == "n":
        return int(raw)
    if key == "primitive":
        return _coerce(raw, bool, key)
    return raw.strip()


def parse_config(path: str | Path) -> RunConfig:
    """Strictly parse a sectioned key=value run config; every key must belong
    to the algorithm's accepted set."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as f:
            parser.read_file(f)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if "run" not in parser:
        raise ConfigError("missing [run] section")
    run = dict(parser["run"])
    for required in ("algo", "env"):
        if required not in run:
            raise ConfigError(f"missing required key {required!r} in [run]")
    algo = run.pop("algo").strip()
    env = run.pop("env").strip()
    if env not in ENV_IDS:
        raise ConfigError(f"unknown environment {env!r}")
    _algo_config_cls(algo)
    cfg = RunConfig(algo=algo, env=env)
    run_hints = {
        "seed": int, "episodes": int, "eval_period": int,
        "eval_episodes": int, "gamma": float, "out_dir": str,
    }
    for key, raw in run.items():
        if key not in run_hints:
            raise ConfigError(f"unknown key {key!r} in [run]")
        setattr(cfg, key, _coerce(raw, run_hints[key], key))
    if "env" in parser:
        for key, raw in parser["env"].items():
            if key not in ENV_KEYS:
                raise ConfigError(f"unknown key {key!r} in [env]")
            cfg.env_params[key] = _coerce_env_value(key, raw)
    if "algo" in parser:
        accepted = _accepted_algo_keys(algo)
        for key, raw in parser["algo"].items():
            if key not in accepted:
                raise ConfigError(f"unknown key {key!r} in [algo] for {algo}")
            cfg.algo_params[key] = _coerce(raw, accepted[key], key)
    extra = set(parser.sections()) - {"run", "env", "algo"}
    if extra:
        raise ConfigError(f"unknown sections {sorted(extra)}")
    return cfg


def learner_config(cfg: RunConfig):
    cls = _algo_config_cls(cfg.algo)
    return cls(gamma=cfg.gamma, **cfg.algo_params)


def resolve_config(cfg: RunConfig) -> RunConfig:
    """Fill every algorithm default so the emitted config is complete."""
    lc = learner_config(cfg)
    params = {
        f.name: getattr(lc, f.name)
        for f in dataclasses.fields(lc)
        if f.name != "gamma"
    }
    return RunConfig(
        algo=cfg.algo, env=cfg.env, seed=cfg.seed, episodes=cfg.episodes,
        eval_period=cfg.eval_period, eval_episodes=cfg.eval_episodes,
        gamma=cfg.gamma, out_dir=cfg.out_dir,
        env_params=dict(cfg.env_params), algo_params=params,
    )


def _render_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_config(cfg: RunConfig) -> str:
    out = io.StringIO()
    out.write("[run]\n")
    out.write(f"algo = {cfg.algo}\n")
    out.write(f"env = {cfg.env}\n")
    for key in ("seed", "episodes", "eval_period", "eval_episodes", "gamma", "out_dir"):
        out.write(f"{key} = {_render_value(getattr(cfg, key))}\n")
    if cfg.env_params:
        out.write("\n[env]\n")
        for key, v in cfg.env_params.items():
            out.write(f"{key} = {_render_value(v)}\n")
    if cfg.algo_params:
        out.write("\n[algo]\n")
        for key, v in cfg.algo_params.items():
            out.write(f"{key} = {_render_value(v)}\n")
    return out.getvalue()


def config_hash(cfg: RunConfig) -> str:
    """Hash over the semantic config: the output location does not change the
    run and is excluded so reruns into fresh directories stay comparable."""
    text = "\n".join(
        line for line in render_config(cfg).splitlines()
        if not line.startswith("out_dir")
    )
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


# -- presets -----------------------------------------------------------------------


def _bp_value_preset(n: int, algo: str, **extra) -> dict:
    base = {
        "run": {
            "algo": algo, "env": "box_pushing", "episodes": 15000,
            "gamma": 0.98, "eval_period": 100, "eval_episodes": 10,
        },
        "env": {"n": n},
        "algo": {
            "lr": 0.001, "batch_size": 128, "buffer_steps": 100000,
            "buffer_episodes": None, "train_freq": 10, "trace_len": 10,
            "target_sync": 5000, "eps_start": 1.0, "eps_end": 0.1,
            "eps_decay_episodes": 4000,
        },
    }
    base["algo"].update(extra)
    return base


def _bp_ac_preset(algo: str, actor_lr, critic_lr, ept, sync, nstep, critic_input) -> dict:
    return {
        "run": {
            "algo": algo, "env": "box_pushing", "episodes": 40000,
            "gamma": 0.95, "eval_period": 100, "eval_episodes": 10,
        },
        "env": {"n": 8},
        "algo": {
            "actor_lr": actor_lr, "critic_lr": critic_lr,
            "episodes_per_train": ept, "target_sync_episodes": sync,
            "n_step": nstep, "eps_start": 1.0, "eps_end": 0.01,
            "eps_decay_episodes": 4000, "critic_input": critic_input,
        },
    }


def _wh_ac_preset(algo: str, actor_lr, critic_lr, ept, sync, nstep) -> dict:
    return {
        "run": {
            "algo": algo, "env": "warehouse_a", "episodes": 40000,
            "gamma": 0.99, "eval_period": 100, "eval_episodes": 10,
        },
        "env": {},
        "algo": {
            "actor_lr": actor_lr, "critic_lr": critic_lr,
            "episodes_per_train": ept, "target_sync_episodes": sync,
            "n_step": nstep, "eps_start": 1.0, "eps_end": 0.01,
            "eps_decay_episodes": 10000, "critic_input": "history",
        },
    }


PRESETS: dict[str, dict] = {
    "ct4_dec_q": {
        "run": {
            "algo": "dec_hddrqn", "env": "capture_target", "episodes": 20000,
            "gamma": 0.95, "eval_period": 100, "eval_episodes": 10,
        },
        "env": {"n": 4},
        "algo": {
            "lr": 0.001, "batch_size": 32, "buffer_steps": 50000,
            "buffer_episodes": None, "train_freq": 5, "target_sync": 5000,
            "eps_start": 1.0, "eps_end": 0.1, "eps_decay_episodes": 4000,
        },
    },
    "bp4_dec_hddrqn": _bp_value_preset(4, "dec_hddrqn", hysteretic_beta=0.0005),
    "bp8_dec_hddrqn": _bp_value_preset(8, "dec_hddrqn", hysteretic_beta=0.0005),
    "bp4_cen_ddrqn": _bp_value_preset(4, "cen_ddrqn", conditional=True),
    "bp4_cen_ddrqn_uncondi": _bp_value_preset(4, "cen_ddrqn", conditional=False),
    "bp8_cen_ddrqn": _bp_value_preset(8, "cen_ddrqn", conditional=True),
    "bp4_macdec_ddrqn": _bp_value_preset(
        4, "macdec_ddrqn", buffer_steps=80000, conditional=True
    ),
    "bp8_macdec_ddrqn": _bp_value_preset(
        8, "macdec_ddrqn", buffer_steps=80000, conditional=True
    ),
    "warehouse_a_dec_q": {
        "run": {
            "algo": "dec_hddrqn", "env": "warehouse_a", "episodes": 40000,
            "gamma": 0.99, "eval_period": 100, "eval_episodes": 10,
        },
        "env": {},
        "algo": {
            "lr": 0.0001, "batch_size": 64, "buffer_episodes": 2000,
            "buffer_steps": None, "train_freq": 128, "target_sync": 5000,
            "eps_start": 1.0, "eps_end": 0.05, "eps_decay_episodes": 10000,
        },
    },
    "warehouse_a_cen_q": {
        "run": {
            "algo": "cen_ddrqn", "env": "warehouse_a", "episodes": 40000,
            "gamma": 0.99, "eval_period": 100, "eval_episodes": 10,
        },
        "env": {},
        "algo": {
            "lr": 0.0001, "batch_size": 64, "buffer_episodes": 2000,
            "buffer_steps": None, "train_freq": 128, "target_sync": 5000,
            "eps_start": 1.0, "eps_end": 0.05, "eps_decay_episodes": 10000,
        },
    },
    "warehouse_a_parallel": {
        "run": {
            "algo": "parallel_macdec_ddrqn", "env": "warehouse_a",
            "episodes": 40000, "gamma": 0.99, "eval_period": 100,
            "eval_episodes": 10,
        },
        "env": {},
        "algo": {
            "lr": 0.0001, "batch_size": 64, "buffer_episodes": 4000,
            "buffer_steps": None, "train_freq": 128, "target_sync": 20000,
            "eps_start": 1.0, "eps_end": 0.05, "eps_decay_episodes": 10000,
        },
    },
    "bp8_mac_iac": _bp_ac_preset("mac_iac", 0.001, 0.003, 16, 32, 5, "history"),
    "bp8_mac_cac": _bp_ac_preset("mac_cac", 0.0005, 0.003, 48, 48, 3, "history"),
    "bp8_naive_mac_iacc": _bp_ac_preset(
        "naive_mac_iacc", 0.0005, 0.001, 48, 144, 0, "state"
    ),
    "bp8_mac_iaicc": _bp_ac_preset(
        "mac_iaicc", 0.0003, 0.003, 48, 144, 0, "state"
    ),
    "warehouse_a_mac_iac": _wh_ac_preset("mac_iac", 0.0003, 0.003, 4, 32, 5),
    "warehouse_a_mac_cac": _wh_ac_preset("mac_cac", 0.0003, 0.003, 4, 32, 5),
    "warehouse_a_naive_mac_iacc": _wh_ac_preset(
        "naive_mac_iacc", 0.0003, 0.003, 4, 32, 3
    ),
    "warehouse_a_mac_iaicc": _wh_ac_preset("mac_iaicc", 0.0005, 0.0005, 4, 32, 5),
    # desk-scale presets used by the acceptance suite
    "bp4_cen_ddrqn_desk": {
        "run": {
            "algo": "cen_ddrqn", "env": "box_pushing", "episodes": 15000,
            "gamma": 0.95, "eval_period": 100, "eval_episodes": 10,
        },
        "env": {"n": 4},
        "algo": {
            "lr": 0.001, "batch_size": 64, "buffer_steps": 40000,
            "buffer_episodes": None, "train_freq": 10, "trace_len": 8,
            "target_sync": 1000, "eps_start": 1.0, "eps_end": 0.1,
            "eps_decay_episodes": 3000, "conditional": True, "fc": 32,
            "gru_cen": 32,
        },
    },
    "bp4_macdec_ddrqn_desk": {
        "run": {
            "algo": "macdec_ddrqn", "env": "box_pushing", "episodes": 15000,
            "gamma": 0.95, "eval_period": 100, "eval_episodes": 10,
        },
        "env": {"n": 4},
        "algo": {
            "lr": 0.001, "batch_size": 64, "buffer_steps": 40000,
            "buffer_episodes": None, "train_freq": 10, "trace_len": 8,
            "target_sync": 1000, "eps_start": 1.0, "eps_end": 0.1,
            "eps_decay_episodes": 3000, "conditional": True, "fc": 32,
            "gru_cen": 32,
        },
    },
    "bp8_mac_iac_desk": {
        "run": {
            "algo": "mac_iac", "env": "box_pushing", "episodes": 3000,
            "gamma": 0.95, "eval_period": 100, "eval_episodes": 10,
        },
        "env": {"n": 8},
        "algo": {
            "actor_lr": 0.001, "critic_lr": 0.003, "episodes_per_train": 16,
            "target_sync_episodes": 32, "n_step": 5, "eps_start": 1.0,
            "eps_end": 0.05, "eps_decay_episodes": 1200,
        },
    },
    "warehouse_a_parallel_desk": {
        "run": {
            "algo": "parallel_macdec_ddrqn", "env": "warehouse_a",
            "episodes": 2000, "gamma": 0.99, "eval_period": 200,
            "eval_episodes": 5,
        },
        "env": {},
        "algo": {
            "lr": 0.0003, "batch_size": 4, "buffer_episodes": 500,
            "buffer_steps": None, "train_freq": 60, "trace_len": 40,
            "target_sync": 2000, "eps_start": 1.0, "eps_end": 0.1,
            "eps_decay_episodes": 800,
        },
    },
}


def preset_config(name: str, **overrides) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    spec = PRESETS[name]
    cfg = RunConfig(
        algo=spec["run"]["algo"], env=spec["run"]["env"],
        env_params=dict(spec.get("env", {})),
        algo_params={k: v for k, v in spec.get("algo", {}).items()},
    )
    for key, v in spec["run"].items():
        if key in ("algo", "env"):
            continue
        setattr(cfg, key, v)
    cfg.out_dir = f"runs/{name}_seed{cfg.seed}"
    for key, v in overrides.items():
        if v is None:
            continue
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown override {key!r}")
        setattr(cfg, key, v)
    return cfg


# -- learner construction -------------------------------------------------------------


def build_env(cfg: RunConfig) -> MacroEnv:
    return make_env(cfg.env, **cfg.env_params)


def build_learner(cfg: RunConfig, env: MacroEnv, streams: dict):
    lc = learner_config(cfg)
    if cfg.algo in AC_ALGOS:
        return AC_ALGOS[cfg.algo](env, lc, streams["init"], streams["explore"])
    if cfg.algo == "parallel_macdec_ddrqn":
        cen_env = build_env(cfg)
        return ParallelMacDecDDRQN(
            env, cen_env, lc, streams["init"], streams["explore"],
            streams["sample"], streams["env"],
        )
    cls = Q_ALGOS[cfg.algo]
    return cls(env, lc, streams["init"], streams["explore"], streams["sample"])


# -- evaluation, smoothing -------------------------------------------------------------


def mean_stderr(returns) -> tuple[float, float]:
    returns = np.asarray(returns, dtype=np.float64)
    n = len(returns)
    mean = float(returns.mean())
    stderr = float(returns.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, stderr


def evaluate(
    learner, env: MacroEnv, n: int, gamma: float, rng_eval: np.random.Generator
) -> tuple[float, float]:
    """Greedy evaluation over n fresh episodes; never touches the training
    buffers or exploration schedules."""
    driver = learner.make_driver(0.0, rng_eval)
    returns = np.zeros(n)
    for j in range(n):
        seed = int(rng_eval.integers(0, 2**63 - 1))
        obs, statuses = env.reset(seed)
        driver.begin_episode(obs)
        ret, disc = 0.0, 1.0
        while True:
            res = env.step(driver.act(statuses, obs))
            ret += disc * res.reward
            disc *= gamma
            obs, statuses = res.observations, res.statuses
            if res.done:
                break
        returns[j] = ret
    return mean_stderr(returns)


def smooth(series, window: int) -> list[float]:
    """Centered moving average with edge truncation (reporting only)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    n = len(series)
    half_lo = (window - 1) // 2
    half_hi = window // 2
    out = []
    for i in range(n):
        lo = max(0, i - half_lo)
        hi = min(n, i + half_hi + 1)
        out.append(float(np.mean(series[lo:hi])))
    return out


# -- training loop -----------------------------------------------------------------------


def _metrics_header(cfg: RunConfig, env_schema: str) -> str:
    return (
        f"# macrl={__version__} config={config_hash(resolve_config(cfg))} "
        f"schema={env_schema}\n"
        "episode,mean_return,stderr,epsilon\n"
    )


def _env_schema_hash(cfg: RunConfig, env: MacroEnv) -> str:
    sf = getattr(env, "schema_file", None)
    return schema_hash(sf) if sf else "none"


def run_training(
    cfg: RunConfig,
    stop_when: Optional[Callable[[float], bool]] = None,
) -> Path:
    """Train per the config, writing metrics, a resolved config, timing, and
    the final checkpoint under out_dir.  Returns the metrics path.  An
    optional stop_when(mean_return) predicate ends training early after an
    evaluation clears it."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = resolve_config(cfg)
    (out / "config_resolved.cfg").write_text(render_config(resolved), encoding="utf-8")
    streams = rng_streams(cfg.seed)
    env = build_env(cfg)
    eval_env = build_env(cfg)
    learner = build_learner(cfg, env, streams)
    schema = _env_schema_hash(cfg, env)
    rows: list[MetricsRow] = []
    t_start = time.monotonic()
    try:
        for ep in range(cfg.episodes):
            learner.set_epsilon(ep)
            seed = int(streams["env"].integers(0, 2**63 - 1))
            learner.train_episode(env, seed)
            if (ep + 1) % cfg.eval_period == 0:
                mean, stderr = evaluate(
                    learner, eval_env, cfg.eval_episodes, cfg.gamma, streams["eval"]
                )
                rows.append(MetricsRow(
                    episode=ep + 1, mean_return=mean, stderr=stderr,
                    epsilon=learner.current_epsilon(),
                    wall_clock_s=time.monotonic() - t_start,
                ))
                if stop_when is not None and stop_when(mean):
                    break
    except NumericError:
        _save_checkpoint(out / "diagnostic.ckpt", learner, resolved, schema)
        raise
    metrics_path = out / "metrics.csv"
    with open(metrics_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(_metrics_header(cfg, schema))
        for r in rows:
            f.write(
                f"{r.episode},{r.mean_return:.10g},{r.stderr:.10g},{r.epsilon:.10g}\n"
            )
    with open(out / "timing.csv", "w", encoding="utf-8", newline="\n") as f:
        f.write("episode,wall_clock_s\n")
        for r in rows:
            f.write(f"{r.episode},{r.wall_clock_s:.3f}\n")
    _save_checkpoint(out / "final.ckpt", learner, resolved, schema)
    return metrics_path


def _save_checkpoint(path: Path, learner, resolved: RunConfig, schema: str) -> None:
    nn.save_checkpoint(
        str(path),
        learner.checkpoint_arrays(),
        meta={
            "version": __version__,
            "config": render_config(resolved),
            "config_hash": config_hash(resolved),
            "schema_hash": schema,
        },
    )


# -- replay -------------------------------------------------------------------------------


def replay_policy(
    checkpoint: str | Path,
    seed: int,
    env: Optional[MacroEnv] = None,
) -> list[str]:
    """Greedy rollout of a checkpointed policy; returns the textual trace
    (one line per primitive tick plus one line per fresh decision)."""
    arrays, meta = nn.load_checkpoint(str(checkpoint))
    cfg = parse_config_text(meta["config"])
    if env is None:
        env = build_env(cfg)
    else:
        expected = _env_schema_hash(cfg, build_env(cfg))
        actual = _env_schema_hash(cfg, env)
        if expected != actual or getattr(env, "primitive", False) != bool(
            cfg.env_params.get("primitive", False)
        ):
            raise ConfigError("checkpoint and environment schemas do not match")
    streams = rng_streams(seed)
    learner = build_learner(cfg, env, streams)
    learner.load_checkpoint_arrays(arrays)
    driver = learner.make_driver(0.0, streams["eval"])
    obs, statuses = env.reset(seed)
    driver.begin_episode(obs)
    names = env.macro_names
    lines = [f"# replay config={meta['config_hash']} seed={seed}"]
    tick = 0
    while True:
        fresh = [st.terminated for st in statuses]
        current = driver.act(statuses, obs)
        tick += 1
        for i in range(env.n_agents):
            if fresh[i]:
                lines.append(trace_decision_line(tick, i, names[i][current[i]]))
        res = env.step(current)
        lines.append(trace_tick_line(
            tick, current, [st.terminated for st in res.statuses], res.reward
        ))
        obs, statuses = res.observations, res.statuses
        if res.done:
            break
    return lines


def seed_sweep(cfg: RunConfig, seeds, max_parallel: int = 2) -> list[Path]:
    """Launch one independent training process per seed (the harness itself
    stays single-threaded for determinism).  Returns the metrics paths."""
    import subprocess
    import sys as _sys

    base = Path(cfg.out_dir)
    jobs: list[tuple[int, Path, subprocess.Popen]] = []
    results: dict[int, Path] = {}
    pending = list(seeds)

    def launch(seed: int) -> tuple[int, Path, subprocess.Popen]:
        out = base / f"seed{seed}"
        out.mkdir(parents=True, exist_ok=True)
        sub = resolve_config(cfg)
        sub.seed = int(seed)
        sub.out_dir = str(out)
        cfg_path = out / "sweep.cfg"
        cfg_path.write_text(render_config(sub), encoding="utf-8")
        proc = subprocess.Popen(
            [_sys.executable, "-m", "macrl.cli", "run", "--config", str(cfg_path)],
            stdout=subprocess.DEVNULL, stderr=subprocess.PIPE,
        )
        return int(seed), out, proc

    while pending or jobs:
        while pending and len(jobs) < max_parallel:
            jobs.append(launch(pending.pop(0)))
        seed, out, proc = jobs.pop(0)
        _, err = proc.communicate()
        if proc.returncode != 0:
            raise RuntimeError(
                f"seed {seed} failed with code {proc.returncode}: "
                f"{err.decode().strip()[-500:]}"
            )
        results[seed] = out / "metrics.csv"
    return [results[s] for s in seeds]


def parse_config_text(text: str) -> RunConfig:
    import tempfile

    with tempfile.NamedTemporaryFile(
        "w", suffix=".cfg", delete=False, encoding="utf-8"
    ) as f:
        f.write(text)
        path = f.name
    try:
        return parse_config(path)
    finally:
        Path(path).unlink(missing_ok=True)
