"""Single-use candidate executor; one process per run, spawned by the runner.

Reads an internal envelope on stdin::

    {"source": str, "v": [float], "content": [dict],
     "memory_mb": int, "jail": str}

and writes the public response object on stdout. Guard rails applied before
the candidate executes:

- address-space cap of ``memory_mb`` on top of the post-import baseline
- an audit hook that blocks socket use, process spawning, and any write or
  delete outside the jail directory (audit hooks cannot be removed, which is
  the point)
- candidate prints are diverted to stderr so stdout stays protocol-clean

The candidate namespace is pre-populated with the shipped capabilities
(numpy as np, pandas as pd, math, scipy linprog, sklearn clustering) since
generated solvers routinely assume them.
"""

from __future__ import annotations

import json
import math
import os
import re
import sys
import traceback

_VERSIONED = re.compile(r"^agent_solver_v(\d+)$")


def _respond(fd: int, payload: dict) -> None:
    os.write(fd, (json.dumps(payload) + "\n").encode("utf-8"))


def _error(fd: int, kind: str, detail: str) -> None:
    _respond(fd, {"error": {"kind": kind, "detail": detail[:2000]}})


def _baseline_bytes() -> int:
    try:
        with open("/proc/self/statm") as fh:
            pages = int(fh.read().split()[0])
        return pages * os.sysconf("SC_PAGE_SIZE")
    except OSError:
        return 512 * 1024 * 1024


def _apply_memory_cap(memory_mb: int) -> None:
    import resource

    cap = _baseline_bytes() + memory_mb * 1024 * 1024
    resource.setrlimit(resource.RLIMIT_AS, (cap, cap))


def _install_guards(jail: str) -> None:
    jail_prefix = os.path.realpath(jail) + os.sep

    def outside_jail(path) -> bool:
        if path is None or isinstance(path, int):
            return False
        if isinstance(path, bytes):
            path = path.decode(errors="replace")
        path = os.path.realpath(str(path))
        if path == os.path.realpath(os.devnull):
            return False  # harmless sink; library plumbing opens it freely
        return not path.startswith(jail_prefix)

    write_flags = os.O_WRONLY | os.O_RDWR | os.O_APPEND | os.O_CREAT | os.O_TRUNC
    blocked_prefixes = ("socket.", "subprocess.", "ftplib.", "urllib.")
    blocked_events = {"os.system", "os.exec", "os.posix_spawn", "os.fork", "os.spawn"}
    destructive = {"os.remove", "os.rename", "os.rmdir", "os.truncate", "shutil.rmtree"}

    def hook(event: str, args) -> None:
        if event.startswith(blocked_prefixes) or event in blocked_events:
            raise RuntimeError(f"sandbox: {event} is not permitted")
        if event == "open":
            path, mode, flags = args
            writing = bool(flags & write_flags) or bool(
                mode and any(ch in mode for ch in "wax+")
            )
            if writing and outside_jail(path):
                raise RuntimeError(
                    f"sandbox: write outside the jail blocked ({path!r})"
                )
        elif event in destructive and args and outside_jail(args[0]):
            raise RuntimeError(f"sandbox: {event} outside the jail blocked")

    sys.addaudithook(hook)


def _resolve_solver(namespace: dict):
    best_name, best_version = None, -1
    for name, value in namespace.items():
        if not callable(value):
            continue
        match = _VERSIONED.match(name)
        if match and int(match.group(1)) > best_version:
            best_name, best_version = name, int(match.group(1))
    if best_name is not None:
        return namespace[best_name]
    fallback = namespace.get("agent_solver")
    return fallback if callable(fallback) else None


def main() -> int:
    real_stdout = os.dup(1)
    envelope = json.loads(sys.stdin.read())
    source = envelope["source"]
    v = envelope["v"]
    content = envelope["content"]
    jail = envelope["jail"]

    # Shipped capabilities; imported before the memory cap so the import
    # footprint does not count against the candidate's budget.
    import numpy as np
    import pandas as pd
    from scipy.optimize import linprog
    from sklearn.cluster import DBSCAN, AgglomerativeClustering, KMeans

    # sklearn's first fit probes loaded libraries through ldconfig (a
    # subprocess); warm that cache now, while spawning is still allowed.
    try:
        KMeans(n_clusters=1, n_init=1).fit(np.zeros((2, 1)))
    except Exception:
        pass

    try:
        _apply_memory_cap(int(envelope.get("memory_mb", 1024)))
    except Exception:
        pass  # platforms without RLIMIT_AS still get the other guards

    os.chdir(jail)
    _install_guards(jail)

    # Anything the candidate prints must not corrupt the protocol stream.
    sys.stdout = sys.stderr

    namespace = {
        "__name__": "candidate",
        "np": np,
        "numpy": np,
        "pd": pd,
        "pandas": pd,
        "math": math,
        "linprog": linprog,
        "KMeans": KMeans,
        "DBSCAN": DBSCAN,
        "AgglomerativeClustering": AgglomerativeClustering,
    }
    try:
        exec(compile(source, "<candidate>", "exec"), namespace)
        solver = _resolve_solver(namespace)
        if solver is None:
            _error(real_stdout, "malformed", "no agent_solver callable defined")
            return 0
        result = solver(np.asarray(v, dtype=float), content)
    except MemoryError:
        _error(real_stdout, "budget", "memory cap exceeded")
        return 0
    except BaseException:
        lines = traceback.format_exc(limit=20).splitlines()
        _error(real_stdout, "crash", "\n".join(lines[-6:]))
        return 0

    try:
        matrix = np.asarray(result, dtype=float)
    except Exception:
        _error(real_stdout, "malformed", f"return value is not numeric: {type(result)}")
        return 0
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        _error(real_stdout, "malformed", f"expected a 2-D matrix, got shape {matrix.shape}")
        return 0
    if matrix.shape[1] != len(v) + 1:
        _error(
            real_stdout,
            "malformed",
            f"expected width {len(v) + 1}, got {matrix.shape[1]}",
        )
        return 0
    if not np.all(np.isfinite(matrix)):
        _error(real_stdout, "malformed", "matrix contains NaN or inf")
        return 0
    _respond(real_stdout, {"setting": [[float(x) for x in row] for row in matrix]})
    return 0


if __name__ == "__main__":
    sys.exit(main())
