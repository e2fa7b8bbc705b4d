"""
siedm command line: build an ESP index over a file and search it.

    siedm build  -i text.bin -o text.idx
    siedm search -x text.idx -q PATTERN -t TAU [--format tsv|json]
    siedm search -x text.idx -Q queries.txt -t TAU
    siedm stats  -x text.idx [-q PATTERN -t TAU]
    siedm oracle edm    -s S -q Q
    siedm oracle window -i text.bin -q Q
    siedm oracle stab   -x text.idx -q Q -t TAU

Exit codes: 0 ok, 1 usage, 2 I/O, 3 corrupt index, 4 bad query or text.
"""

import json
import logging
import os
import sys

import click

import esp
import oracle
import search as search_mod
import store
from errors import IndexFormatError, InputError, QueryError, QueryTooLong
from index import EspIndex, build_index

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_FORMAT = 3
EXIT_QUERY = 4


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _emit_pairs(pairs: dict, fmt: str):
    if fmt == "json":
        click.echo(json.dumps(pairs, indent=2))
    else:
        for key, value in pairs.items():
            click.echo(f"{key}\t{value}")


def _occurrence_records(idx: EspIndex, q: int, occurrences) -> list[dict]:
    return [
        {"pos": o.pos, "dist": o.dist, "size": o.size, "window": idx.extract(o.pos, q).decode("latin-1")}
        for o in occurrences
    ]


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def cli(ctx, verbose):
    """Approximate pattern search with an ESP index."""
    logging.basicConfig(
        level=logging.DEBUG if verbose or store.debug_enabled() else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = store.get_preferences()


@cli.command()
@click.option("-i", "input_path", required=True, help="Text file, read as raw bytes.")
@click.option("-o", "output_path", required=True, help="Index file to write.")
@click.option("--tie-break", type=click.Choice(store.TIE_BREAKS), default=None,
              help="Order of rules sharing a left symbol.")
@click.option("--cv-stride", type=click.IntRange(min=1), default=None,
              help="Store characteristic vectors every k-th round.")
@click.pass_obj
def build(prefs, input_path, output_path, tie_break, cv_stride):
    """Build an index over a text file."""
    text = _read_bytes(input_path)
    idx = build_index(text, tie_break or prefs["tie_break"], cv_stride or prefs["cv_stride"])
    idx.save(output_path)
    info = idx.describe()
    store.log_event("build", input=input_path, output=output_path, **info)
    _emit_pairs(info, "tsv")


@cli.command(name="search")
@click.option("-x", "index_path", required=True, help="Index file.")
@click.option("-q", "query", default=None, help="Query string, taken as the raw bytes of the argument.")
@click.option("-Q", "query_file", default=None, help="File with one query per line.")
@click.option("-t", "tau", type=click.IntRange(min=0), required=True, help="Distance threshold.")
@click.option("--format", "fmt", type=click.Choice(store.OUTPUT_FORMATS), default=None)
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads.")
@click.option("--no-prune", is_flag=True, help="Disable the lower-bound abort.")
@click.pass_obj
def search_cmd(prefs, index_path, query, query_file, tau, fmt, threads, no_prune):
    """Report positions whose window is within tau of the query."""
    if (query is None) == (query_file is None):
        raise click.UsageError("give exactly one of -q or -Q")
    fmt = fmt or prefs["output_format"]
    threads = threads or prefs["threads"]
    idx = EspIndex.load(index_path)
    stats = search_mod.SearchStats()

    if query is not None:
        # Non-UTF-8 arguments arrive surrogate-escaped; fsencode restores the bytes.
        data = os.fsencode(query)
        found = search_mod.search(idx, data, tau, prune=not no_prune, threads=threads, stats=stats)
        if fmt == "json":
            click.echo(json.dumps(_occurrence_records(idx, len(data), found), indent=2))
        else:
            for o in found:
                click.echo(f"{o.pos}\t{o.dist}")
    else:
        results = search_mod.search_file(idx, query_file, tau, prune=not no_prune, threads=threads, stats=stats)
        if fmt == "json":
            records = [
                {"query": q.decode("latin-1"), "occurrences": _occurrence_records(idx, len(q), found)}
                for q, found in results
            ]
            click.echo(json.dumps(records, indent=2))
        else:
            for number, (_, found) in enumerate(results, start=1):
                for o in found:
                    click.echo(f"{number}\t{o.pos}\t{o.dist}")
    store.log_event("search", index=index_path, tau=tau, threads=threads, **stats.as_dict())


@cli.command()
@click.option("-x", "index_path", required=True, help="Index file.")
@click.option("-q", "query", default=None, help="Also run this query and report its counters.")
@click.option("-t", "tau", type=click.IntRange(min=0), default=None)
@click.option("--format", "fmt", type=click.Choice(store.OUTPUT_FORMATS), default=None)
@click.pass_obj
def stats(prefs, index_path, query, tau, fmt):
    """Index metadata, component sizes and, with -q/-t, search counters."""
    if (query is None) != (tau is None):
        raise click.UsageError("-q and -t go together")
    idx = EspIndex.load(index_path)
    info = idx.describe()
    if query is not None:
        counters = search_mod.SearchStats()
        search_mod.search(idx, os.fsencode(query), tau, threads=prefs["threads"], stats=counters)
        info.update(counters.as_dict())
    store.log_event("stats", index=index_path, **info)
    _emit_pairs(info, fmt or prefs["output_format"])


@cli.group(name="oracle")
def oracle_group():
    """Brute-force references for checking results."""


@oracle_group.command(name="edm")
@click.option("-s", "s", required=True)
@click.option("-q", "q", required=True)
@click.option("--max-depth", type=click.IntRange(min=0), default=None)
@click.pass_obj
def oracle_edm(prefs, s, q, max_depth):
    """Exact edit distance with moves of two short strings, with the
    characteristic-vector approximation next to it."""
    cfg = oracle.EdmConfig(prefs["oracle_max_len"], max_depth if max_depth is not None else prefs["oracle_max_depth"])
    s_bytes, q_bytes = os.fsencode(s), os.fsencode(q)
    d = oracle.exact_edm(s_bytes, q_bytes, cfg)
    approx = esp.approx_edm(s_bytes, q_bytes)
    store.log_event("oracle", kind="edm", edm=d, l1=approx)
    click.echo(f"edm\t{'unknown' if d is None else d}")
    click.echo(f"l1\t{approx}")


@oracle_group.command(name="window")
@click.option("-i", "input_path", required=True, help="Text file.")
@click.option("-q", "q", required=True)
def oracle_window(input_path, q):
    """L1 distance of every window's maximal subtree decomposition."""
    text = _read_bytes(input_path)
    data = os.fsencode(q)
    if len(data) > len(text):
        raise QueryTooLong(f"query of {len(data)} bytes is longer than the text ({len(text)})")
    for pos, dist in enumerate(oracle.window_l1(text, data), start=1):
        click.echo(f"{pos}\t{dist}")


@oracle_group.command(name="stab")
@click.option("-x", "index_path", required=True, help="Index file.")
@click.option("-q", "q", required=True)
@click.option("-t", "tau", type=click.IntRange(min=0), required=True)
@click.pass_obj
def oracle_stab(prefs, index_path, q, tau):
    """Check search output against exhaustive enumeration."""
    idx = EspIndex.load(index_path)
    report = oracle.verify(idx, os.fsencode(q), tau, threads=prefs["threads"])
    store.log_event("oracle", kind="stab", index=index_path, tau=tau, agree=report["agree"])
    for key, value in report.items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value) or "-"
        click.echo(f"{key}\t{value}")


def run(args=None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        rv = cli.main(args=args, prog_name="siedm", standalone_mode=False)
    except click.FileError as e:
        e.show()
        return EXIT_IO
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except IndexFormatError as e:
        click.echo(f"error: corrupt index: {e}", err=True)
        return EXIT_FORMAT
    except (QueryError, InputError) as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_QUERY
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_IO
    return rv if isinstance(rv, int) else EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
