"""Deterministic synthetic multimodal corpus with known task structure.

Each task owns a script of sub-activities (an action word plus a few object
words, each lasting a fixed number of segments). A video renders its script
as additive feature prototypes plus Gaussian noise, and narrates it with
sub-activity words mixed with conversational fillers and occasional
distractor words. Everything is a pure function of (inputs, seed), so a
corpus can serve as its own ground truth.

Audio prototypes are positively rescaled copies of the video prototypes:
the two modalities of one video share prototype directions exactly (cosine
one at zero noise), which mirrors the premise that narration and visuals
co-occur.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lexicon
from .core import (
    Corpus,
    DataError,
    Modality,
    ModalityFeatures,
    TokenTimeline,
    VideoRecord,
    stable_hash64,
)


@dataclass(frozen=True)
class GeneratorConfig:
    num_segments: int = 16          # T
    max_nodes: int = 15             # N
    channels: int = 32              # C
    sub_activities_per_task: int = 4
    objects_per_sub: int = 3
    filler_rate: float = 0.3
    noise_sigma: float = 0.1
    cross_task_overlap: float = 0.0   # p: fraction of script words drawn from a shared pool
    within_task_overlap: float = 0.9  # q: probability a content slot uses the active script words
    min_segment_fill: float = 0.7     # fraction of the N slots guaranteed to hold words
    segment_duration_s: float = 1.0

    def validate(self) -> None:
        if self.num_segments < 1 or self.max_nodes < 1 or self.channels < 1:
            raise DataError("num_segments, max_nodes, and channels must be >= 1")
        if self.sub_activities_per_task < 1 or self.objects_per_sub < 1:
            raise DataError("each task needs at least one sub-activity with one object")
        if self.num_segments < self.sub_activities_per_task:
            raise DataError(
                f"num_segments={self.num_segments} cannot cover "
                f"{self.sub_activities_per_task} sub-activities"
            )
        if not 0.0 <= self.filler_rate <= 1.0:
            raise DataError("filler_rate must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise DataError("noise_sigma must be non-negative")
        if not 0.0 <= self.cross_task_overlap <= 1.0:
            raise DataError("cross_task_overlap must lie in [0, 1]")
        if not 0.0 <= self.within_task_overlap <= 1.0:
            raise DataError("within_task_overlap must lie in [0, 1]")
        if not self.within_task_overlap > self.cross_task_overlap:
            raise DataError(
                "within_task_overlap must exceed cross_task_overlap "
                f"({self.within_task_overlap} <= {self.cross_task_overlap})"
            )
        if not 0.0 < self.min_segment_fill <= 1.0:
            raise DataError("min_segment_fill must lie in (0, 1]")


@dataclass(frozen=True)
class SubActivity:
    action_word: str
    object_words: tuple[str, ...]
    duration_segments: int

    @property
    def words(self) -> tuple[str, ...]:
        return (self.action_word,) + self.object_words


@dataclass(frozen=True)
class TaskScript:
    task_id: str
    sub_activities: tuple[SubActivity, ...]
    vocabulary: frozenset[str]

    def validate(self, config: GeneratorConfig) -> None:
        total = sum(s.duration_segments for s in self.sub_activities)
        if total != config.num_segments:
            raise DataError(
                f"script {self.task_id} covers {total} segments, expected "
                f"{config.num_segments}"
            )

    def active_sub_index(self, t: int) -> int:
        acc = 0
        for i, sub in enumerate(self.sub_activities):
            acc += sub.duration_segments
            if t < acc:
                return i
        raise DataError(f"segment {t} outside script {self.task_id}")


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _split_duration(total: int, parts: int, rng: np.random.Generator) -> list[int]:
    """Random composition of `total` into `parts` positive integers."""
    if parts == 1:
        return [total]
    cuts = np.sort(rng.choice(np.arange(1, total), size=parts - 1, replace=False))
    bounds = np.concatenate(([0], cuts, [total]))
    return list(np.diff(bounds).astype(int))


def _sample_scripts(
    num_tasks: int, seed: int, config: GeneratorConfig
) -> list[TaskScript]:
    rng = _rng(seed, 0)
    actions = list(lexicon.ACTION_WORDS)
    objects = list(lexicon.OBJECT_WORDS)
    rng.shuffle(actions)
    rng.shuffle(objects)

    subs = config.sub_activities_per_task
    objs = config.objects_per_sub
    # A small shared pool realizes the configured cross-task vocabulary overlap;
    # the rest of each script is carved from task-exclusive chunks.
    shared_actions = max(1, subs // 2) if config.cross_task_overlap > 0 else 0
    shared_objects = max(1, (subs * objs) // 2) if config.cross_task_overlap > 0 else 0
    if len(actions) < shared_actions + num_tasks * subs:
        raise DataError("not enough distinct action words for this configuration")
    if len(objects) < shared_objects + num_tasks * subs * objs:
        raise DataError("not enough distinct object words for this configuration")
    shared_action_pool = actions[:shared_actions]
    shared_object_pool = objects[:shared_objects]
    action_cursor, object_cursor = shared_actions, shared_objects

    scripts = []
    for k in range(num_tasks):
        task_rng = _rng(seed, 1, k)
        chosen_subs = []
        for _ in range(subs):
            if shared_action_pool and task_rng.random() < config.cross_task_overlap:
                action = shared_action_pool[task_rng.integers(len(shared_action_pool))]
            else:
                action = actions[action_cursor]
                action_cursor += 1
            sub_objects = []
            for _ in range(objs):
                if shared_object_pool and task_rng.random() < config.cross_task_overlap:
                    sub_objects.append(
                        shared_object_pool[task_rng.integers(len(shared_object_pool))]
                    )
                else:
                    sub_objects.append(objects[object_cursor])
                    object_cursor += 1
            chosen_subs.append((action, tuple(sub_objects)))
        durations = _split_duration(config.num_segments, subs, task_rng)
        sub_activities = tuple(
            SubActivity(action_word=a, object_words=o, duration_segments=d)
            for (a, o), d in zip(chosen_subs, durations)
        )
        vocab = frozenset(w for s in sub_activities for w in s.words)
        scripts.append(
            TaskScript(
                task_id=f"s{seed}-task{k:02d}",
                sub_activities=sub_activities,
                vocabulary=vocab,
            )
        )
    return scripts


def _script_prototypes(script: TaskScript, config: GeneratorConfig):
    """Per-segment prototype rows, derived from the script alone."""
    base = stable_hash64(script.task_id)
    task_vec = _rng(base, 0).standard_normal(config.channels)
    audio_scale = float(_rng(base, 1).uniform(0.5, 1.5))
    sub_vecs = [
        _rng(base, 2, i).standard_normal(config.channels)
        for i in range(len(script.sub_activities))
    ]
    proto_v = np.empty((config.num_segments, config.channels))
    for t in range(config.num_segments):
        proto_v[t] = task_vec + sub_vecs[script.active_sub_index(t)]
    return proto_v, audio_scale * proto_v


def render_video(
    script: TaskScript, seed: int, config: GeneratorConfig
) -> tuple[ModalityFeatures, ModalityFeatures, TokenTimeline]:
    """Render one video of a script: features for both modalities plus narration."""
    config.validate()
    script.validate(config)
    proto_v, proto_a = _script_prototypes(script, config)

    noise_rng = _rng(seed, 10)
    video = proto_v + config.noise_sigma * noise_rng.standard_normal(proto_v.shape)
    audio = proto_a + config.noise_sigma * noise_rng.standard_normal(proto_a.shape)

    token_rng = _rng(seed, 11)
    task_words = sorted(script.vocabulary)
    segments: list[list[str]] = []
    min_fill = max(1, int(np.ceil(config.min_segment_fill * config.max_nodes)))
    for t in range(config.num_segments):
        active = script.sub_activities[script.active_sub_index(t)].words
        count = int(token_rng.integers(min_fill, config.max_nodes + 1))
        # The narrator always names what is happening, so every video of a
        # script covers the same content vocabulary; the rest of the slots
        # mix fillers, repeated activity words, and off-activity task words.
        words = list(active[:count])
        for _ in range(count - len(words)):
            if token_rng.random() < config.filler_rate:
                words.append(lexicon.FILLER_WORDS[token_rng.integers(len(lexicon.FILLER_WORDS))])
            elif token_rng.random() < config.within_task_overlap:
                words.append(active[token_rng.integers(len(active))])
            else:
                words.append(task_words[token_rng.integers(len(task_words))])
        segments.append(words)

    duration = config.segment_duration_s
    return (
        ModalityFeatures(Modality.VIDEO, video.astype(np.float32), duration),
        ModalityFeatures(Modality.AUDIO, audio.astype(np.float32), duration),
        TokenTimeline.from_words(segments, config.max_nodes),
    )


def generate_corpus(
    num_tasks: int,
    videos_per_task: int,
    seed: int,
    config: GeneratorConfig | None = None,
) -> Corpus:
    """Generate ``num_tasks * videos_per_task`` videos with shared task structure."""
    if num_tasks < 1 or videos_per_task < 1:
        raise DataError("num_tasks and videos_per_task must be >= 1")
    config = config or GeneratorConfig()
    config.validate()
    scripts = _sample_scripts(num_tasks, seed, config)
    videos = []
    for k, script in enumerate(scripts):
        for v in range(videos_per_task):
            video_seed = int(_rng(seed, 2, k, v).integers(0, 2**63 - 1))
            feats_v, feats_a, timeline = render_video(script, video_seed, config)
            videos.append(
                VideoRecord(
                    video_id=f"task{k:02d}_vid{v:02d}",
                    task_label=f"task{k:02d}",
                    video=feats_v,
                    audio=feats_a,
                    timeline=timeline,
                )
            )
    return Corpus(videos=videos)
