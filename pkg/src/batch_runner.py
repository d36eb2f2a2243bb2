from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from .errors import FaceRespError, create_error_info
from .logger import logger
from .processor_chain import ProcessorChain, ProcessorResult
from .utils.seqdata import ManifestEntry


@dataclass
class BatchResult:
    """Outputs keyed by sequence id, plus the errors.csv rows of failed sequences."""
    outputs: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    errors: List[Dict[str, Any]] = field(default_factory=list)


class BatchRunner:
    """
    Runs one ProcessorChain over every manifest entry on a thread pool.

    Each worker owns its message; results are collected by sequence id so the
    outputs do not depend on the pool size or the manifest order.
    """

    def __init__(self, chain: ProcessorChain, jobs: int = 1):
        self.chain = chain
        self.jobs = max(1, int(jobs))

    def _run_one(self, message: Dict[str, Any]) -> ProcessorResult:
        return self.chain.process(message)

    def run(self, entries: Sequence[ManifestEntry], config: Any,
            context: Optional[Dict[str, Any]] = None) -> BatchResult:
        """
        Args:
            entries: Manifest entries to process
            config: RunConfig passed to every step as data['config']
            context: Shared read-only values merged into every message (template, truth, ...)

        Returns:
            BatchResult
        """
        messages = [{'sequence_id': entry.sequence_id, 'entry': entry, 'config': config, **(context or {})}
                    for entry in entries]
        return self.run_messages(messages)

    def run_messages(self, messages: Sequence[Dict[str, Any]]) -> BatchResult:
        """Run prepared messages, e.g. the outputs of an earlier batch; each needs a 'sequence_id'."""
        logger.info(f"Running {self.chain.name} on {len(messages)} sequences with {self.jobs} worker(s)")
        if self.jobs == 1:
            results = [self._run_one(m) for m in messages]
        else:
            with ThreadPoolExecutor(max_workers=self.jobs, thread_name_prefix=self.chain.name) as pool:
                results = list(pool.map(self._run_one, messages))

        batch = BatchResult()
        for message, result in sorted(zip(messages, results), key=lambda pair: pair[0]['sequence_id']):
            sequence_id = message['sequence_id']
            if result.success:
                batch.outputs[sequence_id] = result.output
                continue
            error = result.error or FaceRespError(f"message dropped before {result.failed_processor}")
            batch.errors.append(create_error_info(error, result.failed_processor, sequence_id))
        logger.info(f"{self.chain.name}: {len(batch.outputs)} succeeded, {len(batch.errors)} failed")
        return batch
