"""Built-in mission definitions for the grid and key-door scenarios."""

from __future__ import annotations

from . import gridworld as gw
from .mission import MissionExpr, parse_mission

C2H_TEXT = """\
# find the cheese, then return home, never touching fire
U (F task(cheese, post=Cheese, pre=True, gc=!Fire, tc=True, action=cheese))
  (F task(home,   post=Home,   pre=Cheese, gc=!Fire, tc=True, action=home))
"""

KEYDOOR_ATOMS = frozenset({
    "NoErr", "KeyStacked", "IsKeyDoor", "VisibleKeyDoor",
    "KeyDoorPassive", "PrizePassive", "PrizeVisible",
})

KEYDOOR_TEXT = """\
# stack the key on the door, move the stack out, then retrieve the prize
U (F task(key,   post=KeyStacked,     pre=IsKeyDoor,    gc=NoErr, tc=VisibleKeyDoor, action=key))
  (U (F task(door,  post=KeyDoorPassive, pre=KeyStacked,   gc=NoErr, tc=KeyStacked,     action=door))
     (F task(prize, post=PrizePassive,   pre=PrizeVisible, gc=NoErr, tc=KeyDoorPassive, action=prize)))
"""


def build_c2h(cfg: gw.GridConfig | None = None) -> MissionExpr:
    alphabet = gw.grid_alphabet(cfg if cfg is not None else gw.GridConfig())
    return parse_mission(C2H_TEXT, alphabet)


def build_keydoor() -> MissionExpr:
    return parse_mission(KEYDOOR_TEXT, KEYDOOR_ATOMS)
