"""Regenerate the demo IoC database shipped in ``covertdns/data``.

One DoH session of 1000 simulated domains per family, fingerprinted with
the default configuration.
"""

import argparse
from pathlib import Path

from covertdns.ioc import IocConfig, IocDatabase, build_ioc, save_db
from covertdns.tables import FAMILIES
from covertdns.trafficsim import family_session, simulate_session

DEMO_SEED = 20201
DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "covertdns" / "data" / "demo_ioc_db.json"


def build_demo_db(seed: int = DEMO_SEED) -> IocDatabase:
    config = IocConfig()
    entries = []
    for i, family in enumerate(FAMILIES):
        series = simulate_session(family_session(family, "doh", seed + i))
        entries.append(build_ioc(series, family, config))
    return IocDatabase(config, entries)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    parser.add_argument("--seed", type=int, default=DEMO_SEED)
    args = parser.parse_args()
    save_db(build_demo_db(args.seed), args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
