"""Unit tests for the processor chain and the batch runner."""

import unittest
from unittest.mock import patch, MagicMock

from src.batch_runner import BatchRunner
from src.config import RunConfig
from src.errors import ParseError
from src.processor_chain import ProcessorChain
from src.utils.seqdata import ManifestEntry, SequenceFormat


def add_one(data):
    data['count'] = data.get('count', 0) + 1
    return data


def fail_on_b(data):
    if data['sequence_id'] == 'b':
        raise ParseError("broken file")
    return data


class Doubler:
    def process(self, message):
        message['count'] *= 2
        return message


class TestProcessorChain(unittest.TestCase):
    """Test cases for ProcessorChain."""

    def test_steps_run_in_order(self) -> None:
        """Functions and objects with .process() are both accepted."""
        chain = ProcessorChain('demo').add_processor(add_one, 'add').add_processor(Doubler(), 'double')
        result = chain.process({'sequence_id': 'a'})
        self.assertTrue(result.success)
        self.assertEqual(result.output['count'], 2)
        self.assertEqual([name for name, _ in result.timings], ['add', 'double'])
        self.assertEqual(chain.names, ['add', 'double'])

    def test_default_step_name(self) -> None:
        chain = ProcessorChain().add_processor(add_one)
        self.assertEqual(chain.names, ['add_one'])

    @patch('src.processor_chain.logger')
    def test_failure_names_the_step(self, mock_logger: MagicMock) -> None:
        """A raising step stops the chain and is reported with its exception.

        Args:
            mock_logger: Mocked logger instance.
        """
        chain = ProcessorChain('demo').add_processor(fail_on_b, 'load').add_processor(add_one, 'add')
        result = chain.process({'sequence_id': 'b'})
        self.assertFalse(result.success)
        self.assertEqual(result.failed_processor, 'load')
        self.assertIsInstance(result.error, ParseError)
        mock_logger.error.assert_called_once_with("Chain demo [b]: load failed: ParseError: broken file")

    def test_dropped_message(self) -> None:
        chain = ProcessorChain('demo').add_processor(lambda m: None, 'drop').add_processor(add_one, 'add')
        result = chain.process({'sequence_id': 'a'})
        self.assertFalse(result.success)
        self.assertIsNone(result.error)
        self.assertEqual(result.failed_processor, 'add')


class TestBatchRunner(unittest.TestCase):
    """Test cases for BatchRunner."""

    def setUp(self) -> None:
        self.entries = [ManifestEntry(sid, f"{sid}.csv", SequenceFormat.LONG) for sid in ('c', 'b', 'a', 'd')]
        self.chain = ProcessorChain('batch').add_processor(fail_on_b, 'load').add_processor(add_one, 'add')

    @patch('src.processor_chain.logger')
    def test_failures_become_error_rows(self, mock_logger: MagicMock) -> None:
        batch = BatchRunner(self.chain).run(self.entries, RunConfig())
        self.assertEqual(list(batch.outputs), ['a', 'c', 'd'])
        self.assertEqual(batch.errors, [{
            'sequence_id': 'b', 'processor': 'load', 'error_type': 'ParseError', 'error': 'broken file',
        }])

    @patch('src.processor_chain.logger')
    def test_pool_size_does_not_change_results(self, mock_logger: MagicMock) -> None:
        serial = BatchRunner(self.chain, jobs=1).run(self.entries, RunConfig(), {'extra': 1})
        pooled = BatchRunner(self.chain, jobs=4).run(self.entries, RunConfig(), {'extra': 1})
        self.assertEqual(list(serial.outputs), list(pooled.outputs))
        self.assertEqual(serial.errors, pooled.errors)
        for sid in serial.outputs:
            self.assertEqual(serial.outputs[sid]['count'], pooled.outputs[sid]['count'])
            self.assertEqual(pooled.outputs[sid]['extra'], 1)

    def test_run_messages_keeps_earlier_outputs(self) -> None:
        chain = ProcessorChain('second').add_processor(Doubler(), 'double')
        batch = BatchRunner(chain, jobs=2).run_messages([{'sequence_id': 'x', 'count': 3}])
        self.assertEqual(batch.outputs['x']['count'], 6)

    def test_jobs_floor(self) -> None:
        self.assertEqual(BatchRunner(self.chain, jobs=0).jobs, 1)


if __name__ == '__main__':
    unittest.main()
