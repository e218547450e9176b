import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import CommandError, call_command
from django.test import SimpleTestCase

from cpfix.cpsemi import identity_map, scaled
from cpfix.forms import NamedMap, problem_to_dict
from cpfix.reports import Status
from cpfix.services import cmd_analyze, cmd_dilation, cmd_validate
from cpfix.vnalg import BlockStructure


class CpfixCommandTests(SimpleTestCase):
    """End-to-end runs of ``manage.py cpfix`` on generated problem files."""

    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.dir = Path(tmp.name)

    def cpfix(self, *args):
        out, err = StringIO(), StringIO()
        call_command('cpfix', *args, stdout=out, stderr=err)
        return out.getvalue(), err.getvalue()

    def demo(self, family, *args):
        path = self.dir / f"{family}.json"
        self.cpfix('demo', family, '-o', str(path), *args)
        return path

    def write(self, name, data):
        path = self.dir / name
        path.write_text(json.dumps(data), encoding='utf-8')
        return path

    def assertReturnCode(self, code, *args):
        with self.assertRaises(CommandError) as cm:
            self.cpfix(*args)
        self.assertEqual(cm.exception.returncode, code)
        return cm.exception

    def test_demo_prints_problem(self):
        out, _ = self.cpfix('demo', 'damping', '--gamma', '0.25')
        data = json.loads(out)
        self.assertEqual(data['algebra'], {'blocks': [2]})
        self.assertEqual(data['maps'][0]['name'], 'damping')

    def test_tail_shift_round_trip(self):
        path = self.demo('tail-shift')
        out, _ = self.cpfix('validate', str(path))
        self.assertIn('all passed', out)
        self.cpfix('analyze', str(path), '--samples', '3')

        report_path = self.dir / 'report.json'
        _, err = self.cpfix('dilation', str(path), '--samples', '3', '--levels', '2', '--json',
                            '-o', str(report_path))
        self.assertIn('all passed', err)
        report = json.loads(report_path.read_text(encoding='utf-8'))
        self.assertEqual(report['exit_code'], 0)
        statuses = {e['task']: e['status'] for e in report['entries']}
        for task in ('COINV', 'COMPRESS', 'MIN', 'ISO', 'LIFTFP', 'lift[1]', 'phi_limit[2]'):
            self.assertEqual(statuses[task], 'PASS', task)

    def test_example_families_pass(self):
        for family in ('rotation', 'damping', 'identity-control'):
            with self.subTest(family=family):
                path = self.demo(family)
                self.cpfix('validate', str(path))
                self.cpfix('analyze', str(path), '--samples', '3')

    def test_identity_control_dilation(self):
        path = self.demo('identity-control', '--n', '2', '--m', '1')
        out, err = self.cpfix('dilation', str(path), '--samples', '3', '--json')
        entries = {e['task']: e for e in json.loads(out)['entries']}
        self.assertTrue(any(line.startswith('ISO') for line in err.splitlines()))
        self.assertEqual(entries['MIN']['data']['verdict'], 'non-minimal')
        self.assertEqual(entries['ISO']['status'], 'SKIPPED')

    def test_random_dilation(self):
        path = self.demo('random-dilation', '--seed', '4', '--n-max', '2', '--m-max', '3')
        self.cpfix('dilation', str(path), '--samples', '3', '--levels', '2')

    def test_mismatched_dimensions(self):
        path = self.write('bad.json', {
            'version': '1',
            'algebra': {'blocks': [2]},
            'maps': [{'name': 'bad', 'kraus': {'0,0': [[[1, 0, 0], [0, 1, 0], [0, 0, 1]]]}}],
        })
        exc = self.assertReturnCode(2, 'validate', str(path))
        self.assertIn('maps[0].kraus["0,0"][0]', str(exc))

    def test_non_contractive_map_fails_validation(self):
        s = BlockStructure((2,))
        path = self.write('double.json', problem_to_dict(s, [NamedMap('double', 'cp', scaled(identity_map(s), 2.0))]))
        self.assertReturnCode(1, 'validate', str(path))
        self.assertReturnCode(2, 'analyze', str(path))

    def test_near_projection_is_snapped(self):
        data = json.loads(self.demo('tail-shift').read_text(encoding='utf-8'))
        data['projection'][0][0][0] = [1.0 + 1e-8, 0.0]
        path = self.write('near.json', data)
        self.assertEqual(cmd_validate(str(path)).exit_code, 0)
        report = cmd_dilation(str(path), samples=2, levels=1)
        self.assertEqual(report.exit_code, 0)

        data['projection'][0][0][0] = [1.001, 0.0]
        path = self.write('far.json', data)
        self.assertEqual(cmd_validate(str(path)).exit_code, 1)
        report = cmd_dilation(str(path), samples=2, levels=1)
        self.assertEqual(report.exit_code, 2)
        self.assertEqual(report.entries[-1].task, 'projection')
        self.assertIs(report.entries[-1].status, Status.ERROR)

    def test_dilation_needs_projection(self):
        path = self.demo('damping')
        exc = self.assertReturnCode(2, 'dilation', str(path))
        self.assertIn('projection', str(exc))

    def test_unknown_family(self):
        self.assertReturnCode(2, 'demo', 'nope')

    def test_malformed_file(self):
        path = self.dir / 'broken.json'
        path.write_text('{"version": ', encoding='utf-8')
        self.assertReturnCode(2, 'analyze', str(path))

    def test_reports_are_deterministic(self):
        path = self.demo('random-mixture', '--seed', '3')
        runs = []
        for _ in range(2):
            report = cmd_analyze(str(path), seed=5, samples=3).as_dict()
            for entry in report['entries']:
                entry.pop('wall_time')
            runs.append(report)
        self.assertEqual(runs[0], runs[1])
        self.assertTrue(all(e['seed'] == 5 for e in runs[0]['entries'] if e['task'] != 'FIXED'))
