"""Bundled word-role lexicon for instructional vocabulary.

A word appears in exactly one list. Actions and states map to the
``action_state`` role (they mediate edges), objects map to ``object``,
and conversational fillers map to ``other``.
"""

from __future__ import annotations

from pathlib import Path

from .core import DataError, Role

ACTION_WORDS = (
    "add", "adjust", "align", "attach", "bake", "beat", "bend", "blend", "boil",
    "caulk", "chill", "chop", "clamp", "clean", "combine", "connect", "cool",
    "crush", "cut", "detach", "dice", "drain", "drill", "dry", "fasten", "file",
    "flip", "fold", "freeze", "fry", "garnish", "glue", "grate", "grill", "heat",
    "hold", "insert", "inspect", "install", "knead", "lift", "loosen", "mark",
    "measure", "melt", "mince", "mix", "mount", "paint", "peel", "place", "polish",
    "pour", "press", "prime", "pull", "push", "remove", "replace", "rinse", "roast",
    "roll", "sand", "saute", "saw", "seal", "season", "secure", "serve", "simmer",
    "slice", "slide", "solder", "spread", "sprinkle", "squeeze", "stir", "strain",
    "taste", "test", "tighten", "toast", "turn", "twist", "unscrew", "wash",
    "weigh", "whisk", "wrap",
)

STATE_WORDS = (
    "cold", "dirty", "done", "firm", "hot", "loose", "ready", "rough", "smooth",
    "soft", "tight", "wet",
)

OBJECT_WORDS = (
    "anchor", "basil", "batter", "beam", "beef", "blender", "board", "bolt",
    "bowl", "bracket", "bread", "breaker", "broth", "brush", "bucket", "bulb",
    "burner", "butter", "cable", "cardboard", "carrot", "ceiling", "chalk",
    "cheese", "chicken", "cloth", "colander", "cord", "cream", "door", "dough",
    "egg", "faucet", "fish", "fitting", "fixture", "floor", "flour", "foil",
    "fork", "frame", "garlic", "glass", "gloves", "goggles", "grater", "grout",
    "hammer", "handle", "hinge", "hose", "iron", "knife", "knob", "ladder",
    "ladle", "latch", "lemon", "lettuce", "level", "lock", "mask", "metal",
    "meter", "milk", "mixer", "nail", "nut", "oil", "onion", "outlet", "oven",
    "pan", "panel", "paper", "pasta", "pencil", "pepper", "pipe", "plank",
    "plastic", "plier", "plug", "pot", "potato", "primer", "rack", "rice",
    "roller", "rope", "ruler", "salt", "sandpaper", "sauce", "screw",
    "screwdriver", "sealant", "sheet", "shower", "skillet", "socket", "spatula",
    "sponge", "spoon", "stove", "string", "stud", "sugar", "switch", "tape",
    "tester", "tile", "tomato", "tongs", "towel", "tray", "valve", "vinegar",
    "vise", "wall", "washer", "water", "window", "wire", "wood", "wrench",
    "yeast",
)

FILLER_WORDS = (
    "a", "alright", "an", "and", "but", "going", "gonna", "here", "i", "it",
    "just", "like", "now", "okay", "or", "really", "right", "so", "that", "then",
    "there", "this", "uh", "um", "very", "we", "well", "yeah", "you",
)


def default_lexicon() -> dict[str, Role]:
    lex: dict[str, Role] = {}
    for word in ACTION_WORDS + STATE_WORDS:
        lex[word] = Role.ACTION_STATE
    for word in OBJECT_WORDS:
        lex[word] = Role.OBJECT
    for word in FILLER_WORDS:
        lex[word] = Role.OTHER
    return lex


def load_lexicon(path: str | Path) -> dict[str, Role]:
    """Read a user lexicon: one ``word<TAB>role`` per line."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing lexicon file: {path}")
    lex: dict[str, Role] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"malformed lexicon line {path}:{lineno}")
        word, role = parts[0].strip(), parts[1].strip()
        try:
            lex[word] = Role(role)
        except ValueError as exc:
            raise DataError(f"unknown role {role!r} at {path}:{lineno}") from exc
    return lex
