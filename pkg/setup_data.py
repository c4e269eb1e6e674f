"""
Apollonia - Data Setup Script

Writes the bundled example domains into data/domains/ so the CLI and the
server can refer to them by name (e.g. --domain three_tangent).

Usage:
    python setup_data.py            # skip files that already exist
    python setup_data.py --force    # overwrite them
"""

import sys

from scripts import config
from scripts.domain_model import (
    build_hex_lattice,
    build_lens,
    build_single_disk,
    build_square_lattice,
    build_three_tangent,
    save_domain,
)

# ============================================================
# BUNDLED DOMAINS
# ============================================================
BUNDLED = {
    "three_tangent": lambda: build_three_tangent(1.0, 1.0, 1.0),
    "three_tangent_123": lambda: build_three_tangent(1.0, 2.0, 3.0),
    "square_lattice_2x2": lambda: build_square_lattice(2, 2),
    "hex_lattice_2x3": lambda: build_hex_lattice(2, 3),
    "lens": lambda: build_lens(),
    "unit_disk": lambda: build_single_disk(0.0, 0.0, 1.0),
}


def write_bundled_domains(directory=config.DOMAIN_DIR, force=False):
    """Write every bundled domain; returns the paths actually written."""
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, build in BUNDLED.items():
        path = directory / f"{name}.json"
        if path.exists() and not force:
            print(f"⏭️  {path.name} exists, skipped")
            continue
        domain = build()
        save_domain(domain, path)
        print(f"✅ {path.name}: {domain.k} disks, {len(domain.gaps)} gaps, area {domain.exact_area:.12g}")
        written.append(path)
    return written


def main():
    print("=" * 50)
    print("Apollonia - Data Setup")
    print("=" * 50)
    force = "--force" in sys.argv[1:]
    written = write_bundled_domains(force=force)
    print(f"\n📁 {len(written)} domain file(s) written to {config.DOMAIN_DIR}")


if __name__ == "__main__":
    main()
