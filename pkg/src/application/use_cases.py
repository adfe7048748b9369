"""Application use cases"""
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from src.core.autodiff import InversionConfig, invert_signature
from src.core.gradcheck import GradCheckResult, check_model_gradients, signature_gradient_sweep
from src.core.sigkernel import KernelConfig, permutation_test
from src.core.signature import (
    batch_signature,
    flatten_nonconstant,
    sig_dim,
    signature,
    time_augment,
    time_augment_array,
    unflatten_nonconstant,
)
from src.core.streamnet.architectures import PRESETS, build_model
from src.domain.exceptions import ShapeError
from src.domain.models import InversionResult, ProcessSpec, Stream, StreamBatch, TruncatedTensor
from src.domain.repositories import ReportRepository, StreamRepository
from src.infrastructure.synthdata import (
    HurstDatasetConfig,
    build_hurst_dataset,
    gen_pen_strokes,
    generate_batch,
)

logger = logging.getLogger(__name__)


def signature_payload(sig: TruncatedTensor) -> dict:
    """JSON form of a signature: flat holds levels 1..N, levels holds every level"""
    return {
        "channels": sig.channels,
        "depth": sig.depth,
        "sig_dim": sig_dim(sig.channels, sig.depth),
        "flat": flatten_nonconstant(sig).tolist(),
        "levels": [level.tolist() for level in sig.levels],
    }


def signature_from_payload(payload: dict) -> TruncatedTensor:
    channels, depth = int(payload["channels"]), int(payload["depth"])
    if "levels" in payload:
        return TruncatedTensor(channels=channels, depth=depth, levels=tuple(payload["levels"]))
    return unflatten_nonconstant(payload["flat"], channels, depth)


def batch_points(batch: StreamBatch, augment: bool) -> np.ndarray:
    """(b, n, d) points, with the time channel prepended when `augment`"""
    if not augment:
        return np.asarray(batch.points)
    return time_augment_array(batch.points, batch.times)


class ComputeSignatureUseCase:
    """Use case for computing the signature of a stream file"""

    def __init__(self, stream_repository: StreamRepository, threads: int = 1):
        self.stream_repository = stream_repository
        self.threads = threads

    def execute(self, depth: int, path: Optional[str] = None, stream: Optional[Stream] = None,
                time_augmented: bool = False) -> dict:
        """
        Compute the truncated signature of a stream

        Args:
            depth: Truncation depth N
            path: CSV stream file, read when `stream` is not given
            stream: Stream to use directly
            time_augmented: Prepend the time coordinate before computing

        Returns:
            Signature payload (channels, depth, sig_dim, flat, levels)
        """
        if stream is None:
            if path is None:
                raise ValueError("either a stream or a stream file is required")
            stream = self.stream_repository.read_stream(path)
        if time_augmented:
            stream = time_augment(stream)
        return signature_payload(signature(stream, depth))

    def execute_batch(self, depth: int, path: str, time_augmented: bool = False) -> dict:
        """
        Compute the signature of every stream in a JSON-lines batch

        Streams are independent and spread over `threads` workers; the output keeps
        the file order.

        Args:
            depth: Truncation depth N
            path: JSON-lines batch file
            time_augmented: Prepend the time coordinate before computing

        Returns:
            {"count": b, "signatures": [signature payload per stream]}
        """
        batch = self.stream_repository.read_batch(path)
        streams = [time_augment(stream) if time_augmented else stream for stream in batch]
        signatures = batch_signature(streams, depth, threads=self.threads)
        return {"count": len(signatures), "signatures": [signature_payload(sig) for sig in signatures]}


class InvertSignatureUseCase:
    """Use case for recovering a stream from a truncated signature"""

    def __init__(self, stream_repository: StreamRepository, report_repository: ReportRepository):
        self.stream_repository = stream_repository
        self.report_repository = report_repository

    def load_target(self, path: str, depth: int) -> tuple[TruncatedTensor, Optional[Stream]]:
        """A `.json` file holds a signature payload; anything else is a CSV stream"""
        if Path(path).suffix.lower() == ".json":
            target = signature_from_payload(self.report_repository.load_json(path))
            if target.depth != depth:
                raise ValueError(f"signature file has depth {target.depth}, requested {depth}")
            return target, None
        reference = self.stream_repository.read_stream(path)
        return signature(reference, depth), reference

    def execute(
        self,
        depth: int,
        path: Optional[str] = None,
        reference: Optional[Stream] = None,
        length: Optional[int] = None,
        config: Optional[InversionConfig] = None,
        seed: int = 0,
        output_path: Optional[str] = None,
    ) -> InversionResult:
        """
        Invert the signature of a target stream or signature file

        Args:
            depth: Truncation depth N
            path: Target file (CSV stream or signature JSON)
            reference: Target stream given directly
            length: Number of points to recover (defaults to the reference length)
            config: Optimizer settings
            seed: Seed of the random initial candidate
            output_path: CSV file for the recovered stream

        Returns:
            InversionResult with the loss trace
        """
        if reference is not None:
            target = signature(reference, depth)
        elif path is not None:
            target, reference = self.load_target(path, depth)
        else:
            raise ValueError("either a reference stream or a target file is required")
        if length is None:
            if reference is None:
                raise ValueError("the number of points to recover is required for a signature target")
            length = reference.length
        start = None if reference is None else reference.points[0]
        result = invert_signature(target, length, depth, config=config, seed=seed, start=start,
                                  reference=reference)
        if output_path:
            self.stream_repository.write_stream(output_path, result.recovered)
        return result


def pen_reference(style: int, length: int, noise: float = 0.0, seed: int = 0) -> Stream:
    """Pen-stroke inversion target"""
    return gen_pen_strokes(style, length, noise, seed)


class MMDTestUseCase:
    """Use case for the signature-kernel two-sample test between two batch files"""

    def __init__(self, stream_repository: StreamRepository, threads: int = 1):
        self.stream_repository = stream_repository
        self.threads = threads

    def execute(
        self,
        a: StreamBatch,
        b: StreamBatch,
        kernel: KernelConfig,
        permutations: int = 200,
        seed: int = 0,
        time_augmented: bool = True,
    ) -> dict:
        """
        Run the permutation test

        Returns:
            Dictionary with statistic, p_value, batch sizes and the kernel settings
        """
        if a.channels != b.channels:
            raise ShapeError(f"batches have {a.channels} and {b.channels} channels")
        result = permutation_test(
            batch_points(a, time_augmented),
            batch_points(b, time_augmented),
            kernel,
            num_permutations=permutations,
            seed=seed,
            threads=self.threads,
        )
        return {**result.to_dict(), "n": len(a), "m": len(b), "depth": kernel.depth,
                "target_norm": kernel.normalization_target}

    def execute_files(self, a_path: str, b_path: str, **kwargs) -> dict:
        return self.execute(self.stream_repository.read_batch(a_path),
                            self.stream_repository.read_batch(b_path), **kwargs)


class GenerateDataUseCase:
    """Use case for writing seeded synthetic batches and their manifests"""

    def __init__(self, stream_repository: StreamRepository, report_repository: ReportRepository, threads: int = 1):
        self.stream_repository = stream_repository
        self.report_repository = report_repository
        self.threads = threads

    @staticmethod
    def manifest_path(output: str) -> str:
        return str(Path(output).with_suffix("")) + ".manifest.json"

    def execute(self, kind: str, count: int, output: str, spec: Optional[ProcessSpec] = None,
                pen_style: int = 0, pen_noise: float = 0.0, dataset: Optional[HurstDatasetConfig] = None) -> dict:
        """
        Generate `count` streams of `kind` and write them as JSON-lines

        Args:
            kind: brownian, ou, fbm, pen or hurst-dataset
            count: Number of streams (ignored for hurst-dataset)
            output: Target JSON-lines file
            spec: Process description for brownian/ou/fbm (length and master seed also apply to pen)
            pen_style: Template for pen strokes
            pen_noise: Jitter for pen strokes
            dataset: Hurst dataset configuration

        Returns:
            The manifest that was written next to the output
        """
        if count < 1:
            raise ValueError("count must be at least 1")
        spec = spec or ProcessSpec()
        if kind == "hurst-dataset":
            return self._hurst_dataset(dataset or HurstDatasetConfig(), output)

        if kind == "pen":
            streams = [gen_pen_strokes(pen_style, spec.length, pen_noise, spec.seed + i) for i in range(count)]
            batch = StreamBatch.from_streams(streams)
            manifest = {"kind": kind, "count": count, "length": spec.length, "seed": spec.seed,
                        "style": pen_style, "noise": pen_noise}
        elif kind in ("brownian", "ou", "fbm"):
            batch = generate_batch(spec.model_copy(update={"kind": kind}), count, self.threads)
            manifest = {"kind": kind, "count": count, "spec": spec.model_copy(update={"kind": kind}).model_dump(),
                        "seed": spec.seed}
        else:
            raise ValueError(f"unknown data kind '{kind}'")

        self.stream_repository.write_batch(output, batch)
        manifest["files"] = [output]
        self.report_repository.save_json(self.manifest_path(output), manifest)
        logger.info(f"Wrote {count} {kind} streams to {output}")
        return manifest

    def _hurst_dataset(self, config: HurstDatasetConfig, output: str) -> dict:
        data = build_hurst_dataset(config, self.threads)
        base = str(Path(output).with_suffix(""))
        files = {"train": f"{base}.train.jsonl", "test": f"{base}.test.jsonl"}
        for split, paths in (("train", data.train_paths), ("test", data.test_paths)):
            self.stream_repository.write_batch(
                files[split], StreamBatch(points=paths[..., None], times=data.times)
            )
        manifest = {
            "kind": "hurst-dataset",
            "dataset": config.model_dump(),
            "seed": config.seed,
            "files": [files["train"], files["test"]],
            "train_hurst": data.train_hurst.tolist(),
            "test_hurst": data.test_hurst.tolist(),
        }
        self.report_repository.save_json(self.manifest_path(output), manifest)
        return manifest


GRADCHECK_LENGTH = 8


class GradCheckUseCase:
    """Use case for the finite-difference gradient suite"""

    def execute(self, seed: int = 0, models: bool = True, tolerance: float = 1e-5) -> dict:
        """
        Check the signature vjp over a grid of (n, d, N) and every model preset

        Returns:
            Dictionary with per-check results and an overall `passed` flag
        """
        results: list[GradCheckResult] = signature_gradient_sweep(seed=seed, tolerance=tolerance)
        if models:
            rng = np.random.default_rng(seed)
            for name, config in PRESETS.items():
                x = time_augment_array(rng.normal(size=(2, GRADCHECK_LENGTH, 1)).cumsum(axis=1))
                model = build_model(config, x.shape[-1], GRADCHECK_LENGTH)
                params = model.init_params(seed)
                results.append(check_model_gradients(model, params, x, seed=seed, name=f"model {name}"))
        passed = all(result.passed for result in results)
        worst = max(results, key=lambda result: result.max_error)
        logger.info(f"Gradient suite: {len(results)} checks, worst {worst.name} at {worst.max_error:.3e}")
        return {
            "passed": passed,
            "checks": [result.to_dict() for result in results],
            "max_error": worst.max_error,
        }
