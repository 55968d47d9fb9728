"""Ready-made scenario configurations for demos and the test harness."""

from __future__ import annotations

from .world import DetectorNoise, ObjectSpec, OracleConfig, ScenarioConfig


def easy(seed: int = 7) -> ScenarioConfig:
    """Three well-separated objects drifting slowly; mild detector noise."""
    return ScenarioConfig(
        seed=seed,
        width=160,
        height=120,
        frames=90,
        objects=(
            ObjectSpec(shape="ellipse", size=(26, 20), start=(30, 30), velocity=(0.5, 0.2), depth=0),
            ObjectSpec(shape="rectangle", size=(24, 22), start=(120, 36), velocity=(-0.4, 0.3), depth=1),
            ObjectSpec(shape="ellipse", size=(28, 24), start=(76, 92), velocity=(0.1, -0.25), depth=2),
        ),
        detector_noise=DetectorNoise(
            tp_score_mode=(0.85, 0.04),
            fp_score_mode=(0.15, 0.05),
            fp_rate=0.5,
            fn_rate=0.05,
            box_jitter=0.02,
        ),
        oracle=OracleConfig(decay_per_frame=0.0005),
    )


def crossing(seed: int = 11, contamination_rate: float = 0.12) -> ScenarioConfig:
    """Two equal objects whose paths meet mid-sequence; the deeper one dwells
    fully hidden behind the front one for roughly fifteen frames (a swing of
    its sinusoid flattens out at the front object's position) before moving
    off again."""
    return ScenarioConfig(
        seed=seed,
        width=200,
        height=120,
        frames=80,
        objects=(
            ObjectSpec(shape="ellipse", size=(30, 26), start=(110, 60), velocity=(0.2, 0.0), depth=0),
            ObjectSpec(
                shape="ellipse",
                size=(30, 26),
                start=(60, 60),
                velocity=(0.2, 0.0),
                amplitude=(50.0, 0.0),
                period=90.0,
                phase=(-1.3, 0.0),
                depth=1,
            ),
        ),
        detector_noise=DetectorNoise(
            tp_score_mode=(0.85, 0.04),
            fp_score_mode=(0.15, 0.05),
            fp_rate=0.2,
            fn_rate=0.02,
            box_jitter=0.02,
        ),
        oracle=OracleConfig(decay_per_frame=0.001, contamination_rate=contamination_rate),
    )


def crowded(seed: int = 13) -> ScenarioConfig:
    """Eight objects weaving through a small arena with heavy box jitter."""
    objects = []
    for i in range(8):
        row, col = divmod(i, 4)
        objects.append(
            ObjectSpec(
                shape="ellipse" if i % 2 == 0 else "rectangle",
                size=(26, 22),
                start=(28 + col * 32, 40 + row * 36),
                velocity=(0.45 if i % 2 == 0 else -0.45, 0.22 if row == 0 else -0.22),
                amplitude=(6.0, 4.0),
                period=34.0 + 3.0 * i,
                phase=(0.7 * i, 0.3 * i),
                depth=i,
            )
        )
    return ScenarioConfig(
        seed=seed,
        width=170,
        height=130,
        frames=70,
        objects=tuple(objects),
        detector_noise=DetectorNoise(
            tp_score_mode=(0.8, 0.05),
            fp_score_mode=(0.2, 0.05),
            fp_rate=1.0,
            fn_rate=0.05,
            box_jitter=0.08,
        ),
        oracle=OracleConfig(decay_per_frame=0.004, contamination_rate=0.1),
    )


def departing(seed: int = 5, exit_frame: int = 30, frames: int = 70) -> ScenarioConfig:
    """One object that leaves the scene partway through the sequence.

    A steady trickle of false positives keeps the score distribution
    bimodal, so the adaptive threshold lands between the modes instead of
    inside the lone true-positive mode.
    """
    return ScenarioConfig(
        seed=seed,
        width=120,
        height=90,
        frames=frames,
        objects=(
            ObjectSpec(shape="ellipse", size=(28, 22), start=(60, 45), exit_frame=exit_frame, depth=0),
        ),
        detector_noise=DetectorNoise(fp_rate=1.0, fn_rate=0.0, box_jitter=0.0),
        oracle=OracleConfig(decay_per_frame=0.0005),
    )


PRESETS = {
    "easy": easy,
    "crossing": crossing,
    "crowded": crowded,
    "departing": departing,
}
