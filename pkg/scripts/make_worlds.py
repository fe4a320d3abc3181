"""Regenerate the bundled world files.

Run from the repo root:  python scripts/make_worlds.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

RES = 0.05
OUT = Path(__file__).resolve().parents[1] / "src" / "rescuesim" / "worlds"


class Canvas:
    def __init__(self, width_m: float, height_m: float):
        self.w = round(width_m / RES)
        self.h = round(height_m / RES)
        self.cells = np.zeros((self.h, self.w), dtype=bool)  # True = wall
        self.tags: list[tuple[int, float, float, float, float]] = []

    def wall_rect(self, x0: float, y0: float, x1: float, y1: float):
        """Fill [x0,x1) x [y0,y1) meters with wall."""
        cx0, cy0 = round(x0 / RES), round(y0 / RES)
        cx1, cy1 = round(x1 / RES), round(y1 / RES)
        self.cells[cy0:cy1, cx0:cx1] = True

    def border(self, thickness: float = 0.1):
        t = thickness
        w_m, h_m = self.w * RES, self.h * RES
        self.wall_rect(0, 0, w_m, t)
        self.wall_rect(0, h_m - t, w_m, h_m)
        self.wall_rect(0, 0, t, h_m)
        self.wall_rect(w_m - t, 0, w_m, h_m)

    def tag(self, tag_id: int, x: float, y: float, facing_deg: float, z: float = 0.2):
        self.tags.append((tag_id, x, y, z, facing_deg))

    def text(self) -> str:
        lines = [f"grid {self.h} {self.w} {RES}"]
        for gy in range(self.h - 1, -1, -1):
            lines.append("".join("#" if self.cells[gy, gx] else "." for gx in range(self.w)))
        for tag_id, x, y, z, facing in self.tags:
            lines.append(f"tag {tag_id} {x} {y} {z} {facing}")
        return "\n".join(lines) + "\n"

    def save(self, name: str, comment: str):
        body = f"; {comment}\n" + self.text()
        (OUT / name).write_text(body)
        walls = int(self.cells.sum())
        print(f"{name}: {self.w}x{self.h} cells, {walls} wall cells, {len(self.tags)} tags")


def make_house() -> Canvas:
    """Open-plan house: 12x9 m, room stubs off a free center, 11 tags."""
    c = Canvas(12.0, 9.0)
    c.border(0.1)
    # Room divider stubs (all door gaps >= 1.2 m).
    c.wall_rect(3.9, 0.1, 4.0, 3.2)    # lower-left room wall
    c.wall_rect(3.9, 4.6, 4.0, 8.9)    # upper-left room wall
    c.wall_rect(7.9, 0.1, 8.0, 2.6)    # lower-right stub
    c.wall_rect(7.9, 4.2, 8.0, 6.4)    # mid-right stub
    c.wall_rect(8.0, 6.3, 10.2, 6.4)   # upper-right room shelf
    c.wall_rect(0.1, 4.5, 2.2, 4.6)    # left alcove shelf

    # Tags sit 0.15 m off a wall face, facing into the room.
    c.tag(0, 0.25, 1.5, 0.0)       # west wall, lower-left room
    c.tag(1, 2.0, 0.25, 90.0)      # south wall, lower-left room
    c.tag(2, 0.25, 7.0, 0.0)       # west wall, upper-left room
    c.tag(3, 2.5, 8.75, 270.0)     # north wall, upper-left room
    c.tag(4, 4.15, 2.0, 0.0)       # east face of lower-left wall stub
    c.tag(5, 6.0, 8.75, 270.0)     # north wall, center hall
    c.tag(6, 6.0, 0.25, 90.0)      # south wall, center hall
    c.tag(7, 7.85, 5.2, 180.0)     # west face of mid-right stub
    c.tag(8, 11.75, 1.5, 180.0)    # east wall, lower-right room
    c.tag(9, 11.75, 7.5, 180.0)    # east wall, upper-right room
    c.tag(10, 9.0, 6.55, 90.0)     # top face of upper-right shelf
    return c


def make_world() -> Canvas:
    """Pillared arena: 4x4 m box with a 3x3 pillar grid, 11 tags.

    Pillar placement leaves the four quarter-point sweep centers clear of
    the inflation band, and every tag has line-of-sight to at least one of
    those centers, so the search phase recovers all tags on any seed.
    """
    c = Canvas(4.0, 4.0)
    c.border(0.1)
    for px in (0.7, 2.0, 3.3):
        for py in (0.7, 2.0, 3.3):
            c.wall_rect(px - 0.08, py - 0.08, px + 0.08, py + 0.08)

    # Wall tags near the quarter points.
    c.tag(0, 0.25, 1.1, 0.0)
    c.tag(1, 0.25, 2.9, 0.0)
    c.tag(2, 1.1, 0.25, 90.0)
    c.tag(3, 2.9, 0.25, 90.0)
    c.tag(4, 3.75, 1.1, 180.0)
    c.tag(5, 3.75, 2.9, 180.0)
    c.tag(6, 1.1, 3.75, 270.0)
    c.tag(7, 2.9, 3.75, 270.0)
    # Pillar-mounted tags (faces pointing into open lanes).
    c.tag(8, 1.87, 2.0, 180.0)     # west face, center pillar
    c.tag(9, 2.0, 0.86, 90.0)      # north face, bottom-center pillar
    c.tag(10, 3.3, 1.84, 270.0)    # south face, right-center pillar
    return c


def make_maze() -> Canvas:
    """Serpentine corridor maze: 8x6 m, 8 tags, tag 7 faces into the east
    wall so no reachable viewpoint ever sees its face.

    The seven findable tags all have line-of-sight (within range and
    facing limits) to the corridor-2/corridor-4 sweep lattice centers, so
    they are recovered deterministically by the search phase even when the
    exploration path never looks at them.
    """
    c = Canvas(8.0, 6.0)
    c.border(0.1)
    # Comb walls, alternating attachment, 1.5 m gaps at the open end.
    c.wall_rect(1.5, 0.1, 1.6, 4.4)
    c.wall_rect(3.1, 1.6, 3.2, 5.9)
    c.wall_rect(4.7, 0.1, 4.8, 4.4)
    c.wall_rect(6.3, 1.6, 6.4, 5.9)

    c.tag(0, 1.75, 2.5, 0.0)       # east face of wall 1 (corridor 2)
    c.tag(1, 2.95, 3.0, 180.0)     # west face of wall 2 (corridor 2)
    c.tag(2, 2.3, 0.25, 90.0)      # south wall, corridor 2
    c.tag(3, 2.8, 5.75, 270.0)     # north wall, corridor 2
    c.tag(4, 4.95, 2.0, 0.0)       # east face of wall 3 (corridor 4)
    c.tag(5, 6.15, 4.0, 180.0)     # west face of wall 4 (corridor 4)
    c.tag(6, 5.5, 0.25, 90.0)      # south wall, corridor 4
    # Mounted on the inner face of the east wall but FACING the wall
    # (+x): every reachable viewpoint is west of it, over 90 degrees off
    # its normal, so the facing check always fails.
    c.tag(7, 7.75, 3.0, 0.0)
    return c


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    make_house().save("house.txt", "open-plan house arena, 11 wall tags")
    make_world().save("world.txt", "pillared square arena, 11 tags")
    make_maze().save("maze.txt", "serpentine corridor maze, 8 tags (tag 7 unseeable)")
