"""
Sample game initialization script
Run this script to write the catalog games as JSON files into games/
"""
import argparse
from pathlib import Path

from models.catalog_model import CATALOG
from models.game_model import save_game


def init_games(directory="games", names=None):
    """Write every catalog game (or only ``names``) and return the written paths"""
    print("Writing sample games...")
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)

    written = []
    for name, build in CATALOG.items():
        if names and name not in names:
            continue
        path = target / f"{name}.json"
        save_game(path, build())
        print(f"  {path}")
        written.append(path)

    print(f"Done: {len(written)} game(s) written.")
    return written


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", default="games")
    parser.add_argument("names", nargs="*", help="catalog names (default: all)")
    args = parser.parse_args()
    init_games(args.dir, args.names)
