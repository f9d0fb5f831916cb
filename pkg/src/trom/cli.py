"""Command-line interface: snapshot generation, compression, basis queries,
reduced solves, studies, and compression reports.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.
"""

from __future__ import annotations

import functools
import json
import sys

import click
import numpy as np

from .analysis import compression_report, gain_study, solution_error
from .decomp import cp_als, cp_rank_sweep, hosvd, tt_svd
from .dynsys import (
    Trajectory,
    crank_nicolson,
    generate_snapshots,
    project_local,
    project_universal,
)
from .errors import InputError, InvalidInput, NumericalError
from .rom import UniversalBasis, local_basis, pod_basis, offline_cp, offline_hosvd, offline_tt
from .sampling import (
    CartesianGrid,
    GeneralSampling,
    general_vector,
    lagrange_vectors,
    load_sampling,
)
from .storage import (
    build_model_from_config,
    load_basis,
    load_model_config,
    load_payload,
    save_basis,
    save_payload,
    save_trajectory_csv,
    write_container,
)
from .tensor import DenseTensor, read_tensor, write_tensor

__all__ = ["main"]


def _translate_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InputError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except NumericalError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _parse_alpha(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",") if x.strip() != ""])
    except ValueError as exc:
        raise InvalidInput(f"cannot parse parameter list {text!r}") from exc


def _read_tensor_file(path) -> DenseTensor:
    with open(path, "rb") as f:
        return read_tensor(f)


def _vectors_from_header(header: dict, alpha: np.ndarray, p: int, q: int | None):
    """Rebuild interpolation vectors from the payload header metadata."""
    nodes = header.get("axis_nodes")
    if not nodes:
        raise InvalidInput("payload header lacks axis nodes; re-run compress "
                           "with --sampling")
    if header.get("sampling") == "general":
        samples = np.asarray(nodes, dtype=np.float64)
        lo = samples.min(axis=0)
        hi = samples.max(axis=0)
        box = _box_from_bounds(np.column_stack([lo, hi]))
        s = GeneralSampling(box=box, samples=samples)
        return general_vector(s, alpha, q or min(s.size, 2 * (s.box.dimension + 1)))
    grid = _grid_from_nodes(nodes)
    return lagrange_vectors(grid, alpha, p)


def _box_from_bounds(bounds) -> "ParameterBox":
    from .sampling import ParameterBox

    return ParameterBox(bounds=tuple((float(lo), float(hi)) for lo, hi in bounds))


def _grid_from_nodes(nodes) -> CartesianGrid:
    arrays = [np.asarray(a, dtype=np.float64) for a in nodes]
    box = _box_from_bounds([(a.min(), a.max()) for a in arrays])
    return CartesianGrid(box=box, nodes=tuple(arrays))


@click.group()
def main():
    """Tensor reduced-order models: compress snapshot tensors offline, build
    parameter-specific reduced bases online."""


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True),
              help="Model config JSON.")
@click.option("--sampling", "sampling_path", required=True,
              type=click.Path(exists=True), help="Sampling JSON (grid or samples).")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output snapshot tensor file.")
@_translate_errors
def generate(model_path, sampling_path, out_path):
    """Solve the model at every sample and store the snapshot tensor."""
    family, box, dt, n_steps = build_model_from_config(load_model_config(model_path))
    sampling = load_sampling(sampling_path)
    if sampling.box.dimension != box.dimension:
        raise InvalidInput("sampling box dimension does not match the model box")
    phi = generate_snapshots(family, sampling, dt, n_steps)
    with open(out_path, "wb") as f:
        write_tensor(phi, f)
    click.echo(f"wrote tensor {phi.dims} to {out_path}")


@main.command()
@click.option("--tensor", "tensor_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", required=True,
              type=click.Choice(["cp", "hosvd", "tt"]))
@click.option("--eps", type=float, default=None, help="Relative accuracy target.")
@click.option("--rank", type=int, default=None, help="CP rank (cp only).")
@click.option("--payload", "payload_path", required=True, type=click.Path())
@click.option("--basis", "basis_path", required=True, type=click.Path())
@click.option("--sampling", "sampling_path", type=click.Path(exists=True),
              default=None, help="Sampling JSON; embeds nodes in the payload.")
@click.option("--max-rank", type=int, default=None, help="CP sweep rank cap.")
@click.option("--seed", type=int, default=None, help="CP initialization seed.")
@_translate_errors
def compress(tensor_path, fmt, eps, rank, payload_path, basis_path,
             sampling_path, max_rank, seed):
    """Compress a snapshot tensor and split it into basis and payload."""
    phi = _read_tensor_file(tensor_path)
    if fmt == "cp":
        if (eps is None) == (rank is None):
            raise InvalidInput("cp takes exactly one of --eps or --rank")
        if rank is not None:
            d = cp_als(phi, rank, random_state=seed)
        else:
            d = cp_rank_sweep(phi, eps, max_rank=max_rank, random_state=seed)
        basis, payload = offline_cp(d)
        ranks = [d.rank]
    elif fmt == "hosvd":
        if eps is None:
            raise InvalidInput("hosvd needs --eps")
        d = hosvd(phi, eps=eps)
        basis, payload = offline_hosvd(d)
        ranks = list(d.core.dims)
    else:
        if eps is None:
            raise InvalidInput("tt needs --eps")
        d = tt_svd(phi, eps)
        basis, payload = offline_tt(d)
        ranks = list(d.ranks)

    axis_nodes = None
    kind = None
    if sampling_path is not None:
        sampling = load_sampling(sampling_path)
        if isinstance(sampling, CartesianGrid):
            axis_nodes = [n.tolist() for n in sampling.nodes]
            kind = "cartesian"
        else:
            axis_nodes = sampling.samples.tolist()
            kind = "general"
    save_payload(payload_path, payload, eps_achieved=d.rel_error,
                 axis_nodes=axis_nodes, sampling=kind)
    save_basis(basis_path, basis)
    click.echo(
        f"{fmt}: ranks {ranks}, relative error {d.rel_error:.3e}, "
        f"payload entries {payload.entry_count}"
    )


@main.command()
@click.option("--payload", "payload_path", required=True, type=click.Path(exists=True))
@click.option("--alpha", required=True, help="Comma-separated parameter values.")
@click.option("--n", type=int, required=True, help="Local basis size.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--p", type=int, default=2, show_default=True,
              help="Interpolation order on grids.")
@click.option("--q", type=int, default=None, help="Neighbor count (scattered).")
@_translate_errors
def basis(payload_path, alpha, n, out_path, p, q):
    """Compute local reduced-basis coordinates for one parameter."""
    payload, header = load_payload(payload_path)
    a = _parse_alpha(alpha)
    e = _vectors_from_header(header, a, p, q)
    lb = local_basis(payload, e, n)
    write_container(
        out_path,
        {"type": "local_basis", "n": lb.n, "numerical_rank": lb.numerical_rank,
         "padded": lb.padded, "alpha": a.tolist()},
        [("coords", lb.coords, "array"),
         ("singular_values", lb.singular_values, "array")],
    )
    click.echo(
        f"n={lb.n}, numerical rank {lb.numerical_rank}, "
        f"leading singular values {np.array2string(lb.singular_values[:5], precision=4)}"
    )


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--alpha", required=True, help="Comma-separated parameter values.")
@click.option("--n", type=int, required=True, help="Reduced basis size.")
@click.option("--method", required=True, type=click.Choice(["trom", "pod"]))
@click.option("--payload", "payload_path", type=click.Path(exists=True), default=None)
@click.option("--basis", "basis_path", type=click.Path(exists=True), default=None)
@click.option("--tensor", "tensor_path", type=click.Path(exists=True), default=None,
              help="Snapshot tensor (pod only).")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--truth", type=click.Choice(["solve", "skip"]), default="solve",
              show_default=True, help="Also solve full model and report error.")
@click.option("--p", type=int, default=2, show_default=True)
@click.option("--q", type=int, default=None)
@_translate_errors
def solve(model_path, alpha, n, method, payload_path, basis_path, tensor_path,
          out_path, truth, p, q):
    """Solve a reduced model at one parameter and export the trajectory."""
    family, box, dt, n_steps = build_model_from_config(load_model_config(model_path))
    a = _parse_alpha(alpha)
    if a.size != box.dimension:
        raise InvalidInput(
            f"alpha has {a.size} entries, model box has {box.dimension}"
        )
    if method == "trom":
        if payload_path is None or basis_path is None:
            raise InvalidInput("trom solve needs --payload and --basis")
        payload, header = load_payload(payload_path)
        u = load_basis(basis_path)
        e = _vectors_from_header(header, a, p, q)
        lb = local_basis(payload, e, n)
        rs = project_local(project_universal(family, u), lb)
    else:
        if tensor_path is None:
            raise InvalidInput("pod solve needs --tensor")
        phi = _read_tensor_file(tensor_path)
        u = UniversalBasis(u=pod_basis(phi, n), source_format="pod")
        rs = project_universal(family, u)
    red = crank_nicolson(rs.system, a, dt, n_steps)
    lifted = Trajectory(red.times, rs.lifting @ red.states)
    save_trajectory_csv(out_path, lifted)
    msg = f"wrote trajectory ({lifted.states.shape[0]} states x {lifted.steps} steps)"
    if truth == "solve":
        full = crank_nicolson(family, a, dt, n_steps)
        err = solution_error(lifted, full)
        msg += f", relative error {err:.6e}"
    click.echo(msg)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Study spec JSON.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Per-record CSV output.")
@click.option("--aggregates", "agg_path", type=click.Path(), default=None,
              help="Aggregate JSON output.")
@_translate_errors
def study(config_path, out_path, agg_path):
    """Run an out-of-sample gain study from a JSON spec."""
    with open(config_path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    family, box, dt, n_steps = build_model_from_config(doc["model"])
    sampling = load_sampling(doc["sampling"])
    report = gain_study(
        family,
        sampling,
        formats=doc.get("formats", ["hosvd", "tt"]),
        n_values=doc.get("n_values", [10]),
        eps_values=doc.get("eps_values", [1e-6]),
        n_random=int(doc.get("n_random", 50)),
        seed=int(doc.get("seed", 0)),
        dt=dt,
        n_steps=n_steps,
        p=int(doc.get("p", 2)),
        q=doc.get("q"),
        cp_max_rank=doc.get("cp_max_rank"),
    )
    with open(out_path, "w", encoding="utf-8") as f:
        f.write("format,n,eps,representation_error,solution_error,pod_error,gain,alpha\n")
        for r in report.records:
            alpha_txt = ";".join(f"{x:.12g}" for x in r.alpha)
            f.write(
                f"{r.format},{r.n},{r.eps},{r.representation_error:.12e},"
                f"{r.solution_error_linf_l2:.12e},{r.pod_error:.12e},"
                f"{r.gain:.12e},{alpha_txt}\n"
            )
    aggs = report.aggregates()
    if agg_path:
        with open(agg_path, "w", encoding="utf-8") as f:
            json.dump({"seed": report.seed, "aggregates": aggs,
                       "failures": [list(x) for x in report.failures]}, f, indent=2)
    for g in aggs:
        eps_txt = "-" if g["eps"] is None else f"{g['eps']:g}"
        click.echo(
            f"{g['format']:>6} n={g['n']:<3} eps={eps_txt:<8} "
            f"mean gain {g['mean']:.4g} min {g['min']:.4g} std {g['std']:.4g}"
        )
    if report.failures:
        click.echo(f"{len(report.failures)} work items failed", err=True)


@main.command()
@click.option("--payload", "payload_path", required=True, type=click.Path(exists=True))
@click.option("--m", "m_dim", type=int, required=True, help="Full spatial dimension.")
@click.option("--n-steps", type=int, required=True, help="Time steps N.")
@click.option("--k", type=int, default=None,
              help="Parameter sample count (scattered; inferred from header "
                   "nodes when omitted).")
@click.option("--out", "out_path", type=click.Path(), default=None)
@_translate_errors
def report(payload_path, m_dim, n_steps, k, out_path):
    """Exact payload entry counts and the compression factor."""
    payload, header = load_payload(payload_path)
    fmt = header["format"]
    nodes = header.get("axis_nodes")
    if header.get("sampling") == "general":
        k_total = k if k is not None else (len(nodes) if nodes else None)
        if k_total is None:
            raise InvalidInput("scattered payload needs --k or header nodes")
        sizes = ()
    else:
        if nodes:
            sizes = tuple(len(a) for a in nodes)
        else:
            sizes = payload.axis_sizes
        k_total = None
    rep = compression_report(fmt, header["ranks"] if fmt != "cp" else [payload.rank],
                             sizes, m_dim, n_steps, k=k_total)
    doc = {
        "format": rep.format,
        "ranks": list(rep.ranks),
        "tensor_entries": rep.tensor_entries,
        "payload_entries": rep.payload_entries,
        "actual_payload_entries": payload.entry_count,
        "compression_factor": str(rep.compression_factor),
        "compression_factor_float": float(rep.compression_factor),
    }
    text = json.dumps(doc, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    click.echo(text)


if __name__ == "__main__":
    main()
