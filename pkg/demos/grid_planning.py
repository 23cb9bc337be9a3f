"""Global planning on an occupancy grid: A* plus line-of-sight shortcutting.

Builds a map with a wall and a gap, plans around it with obstacle inflation,
and prints the shortcut waypoints. The same grid format is what `robokit plan`
loads from disk (docs/formats.md).
"""

from pathlib import Path

from robokit import plan_global
from robokit.geometry import Pose2D
from robokit.planning import OccupancyGrid

grid = OccupancyGrid.empty(40, 30, 0.1)
grid.set_box(1.5, 0.0, 1.7, 2.2, 1)  # wall from the bottom, gap near the top

start = Pose2D(0.5, 0.5, 0.0)
goal = Pose2D(3.5, 2.5, 0.0)
waypoints = plan_global(grid, start, goal, inflation=0.15)

print(f"grid: {grid.width} x {grid.height} cells at {grid.resolution} m/cell")
print(f"planning {start.x, start.y} -> {goal.x, goal.y} with 0.15 m inflation\n")
print("shortcut waypoints:")
for x, y in waypoints:
    print(f"  ({x:.3f}, {y:.3f})")

out = Path(__file__).parent / "out"
out.mkdir(parents=True, exist_ok=True)
map_file = out / "demo_map.grid"
grid.save(map_file)
print(f"\nmap written to {map_file} — try:")
print(f"  robokit plan --map {map_file} --start 0.5,0.5,0 --goal 3.5,2.5,0 --inflation 0.15")
