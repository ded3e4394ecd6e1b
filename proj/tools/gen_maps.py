#!/usr/bin/env python3
"""Regenerates assets/maps/*.map. Deterministic: fixed seeds, stable ordering."""
import random
from pathlib import Path

ROAD_MARGIN = 9.0  # keep prop footprints clear of pavement + shoulder


def grid_town(name, n, spacing, seed, building_density, tree_density):
    rng = random.Random(seed)
    lines = [f"town {name}"]
    lo, hi = -30.0, (n - 1) * spacing + 30.0
    lines.append(f"bounds {lo:g} {lo:g} {hi:g} {hi:g}")
    for i in range(n):
        for j in range(n):
            lines.append(f"node {name[-1]}{i}{j} {i * spacing:g} {j * spacing:g}")
    for i in range(n):
        for j in range(n):
            if i + 1 < n:
                lines.append(f"edge {name[-1]}{i}{j} {name[-1]}{i + 1}{j}")
            if j + 1 < n:
                lines.append(f"edge {name[-1]}{i}{j} {name[-1]}{i}{j + 1}")

    def clear_of_junctions(cx, cy, w, h):
        # Junction discs are drivable out to ~20.5 m from grid nodes.
        for nx in (round(cx / spacing - 0.5) * spacing, round(cx / spacing + 0.5) * spacing):
            for ny in (round(cy / spacing - 0.5) * spacing, round(cy / spacing + 0.5) * spacing):
                for sx in (-0.5, 0, 0.5):
                    for sy in (-0.5, 0, 0.5):
                        px, py = cx + sx * w, cy + sy * h
                        if ((px - nx) ** 2 + (py - ny) ** 2) ** 0.5 < 22.0:
                            return False
        return True

    def block_props(bx, by):
        # Usable interior of one block, clear of roads on all four sides.
        x0, x1 = bx * spacing + ROAD_MARGIN, (bx + 1) * spacing - ROAD_MARGIN
        y0, y1 = by * spacing + ROAD_MARGIN, (by + 1) * spacing - ROAD_MARGIN
        placed = []
        for _ in range(building_density):
            for _attempt in range(20):
                w = rng.uniform(18, 42)
                h = rng.uniform(18, 42)
                cx = rng.uniform(x0 + w / 2 + 2, x1 - w / 2 - 2)
                cy = rng.uniform(y0 + h / 2 + 2, y1 - h / 2 - 2)
                if not clear_of_junctions(cx, cy, w, h):
                    continue
                if all(abs(cx - px) > (w + pw) / 2 + 4 or abs(cy - py) > (h + ph) / 2 + 4
                       for px, py, pw, ph in placed):
                    placed.append((cx, cy, w, h))
                    height = rng.uniform(7, 18)
                    shade = rng.randrange(7)
                    lines.append(
                        f"prop building {cx:.1f} {cy:.1f} {w:.1f} {h:.1f} "
                        f"{height:.1f} 0 {shade}")
                    break
        for _ in range(tree_density):
            # Trees line the roads just beyond the shoulder.
            for _attempt in range(20):
                side = rng.choice(["n", "s", "e", "w"])
                if side in ("n", "s"):
                    cx = rng.uniform(x0 + 3, x1 - 3)
                    cy = y0 + 2.0 if side == "s" else y1 - 2.0
                else:
                    cy = rng.uniform(y0 + 3, y1 - 3)
                    cx = x0 + 2.0 if side == "w" else x1 - 2.0
                size = rng.uniform(2.0, 3.4)
                if clear_of_junctions(cx, cy, size, size):
                    lines.append(
                        f"prop tree {cx:.1f} {cy:.1f} {size:.1f} {size:.1f} "
                        f"{rng.uniform(4, 7):.1f} 0 {rng.randrange(7)}")
                    break

    for bx in range(n - 1):
        for by in range(n - 1):
            block_props(bx, by)

    # Poles along the outer ring for extra parallax cues.
    for i in range(n - 1):
        for frac in (0.33, 0.66):
            x = (i + frac) * spacing
            if abs((x % spacing)) < 25 or abs((x % spacing) - spacing) < 25:
                continue
            lines.append(f"prop pole {x:.1f} {-ROAD_MARGIN - 1:.1f} 0.4 0.4 6.0 0 0")
            lines.append(
                f"prop pole {x:.1f} {(n - 1) * spacing + ROAD_MARGIN + 1:.1f} 0.4 0.4 6.0 0 0")
    return "\n".join(lines) + "\n"


def main():
    out = Path(__file__).resolve().parent.parent / "assets" / "maps"
    out.mkdir(parents=True, exist_ok=True)
    (out / "town-a.map").write_text(
        grid_town("town-a", 4, 140.0, seed=11, building_density=4, tree_density=6))
    (out / "town-b.map").write_text(
        grid_town("town-b", 3, 170.0, seed=23, building_density=3, tree_density=9))
    print("wrote", out / "town-a.map")
    print("wrote", out / "town-b.map")


if __name__ == "__main__":
    main()
