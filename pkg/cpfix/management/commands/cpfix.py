import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from cpfix import services
from cpfix.exceptions import CpfixError, ParseError, UnknownFamily


def _blocks(value):
    try:
        return tuple(int(n) for n in value.split(','))
    except ValueError:
        raise CommandError(f"--blocks expects a comma separated list of sizes, got {value!r}", returncode=2)


class Command(BaseCommand):
    help = 'Fixed-point analysis of commuting CP semigroups and their endomorphic dilations.'

    def _common(self, parser):
        parser.add_argument('--seed', type=int, help='Seed for sampled checks (default from settings).')
        parser.add_argument('--samples', type=int, help='Random samples per property check.')
        parser.add_argument('-o', '--output', help='Write the JSON result to this file.')
        parser.add_argument('--json', action='store_true', help='Print the JSON result instead of a table.')

    def add_arguments(self, parser):
        sub = parser.add_subparsers(dest='action', required=True)

        validate = sub.add_parser('validate', help='Check the maps, family and projection of a file.')
        validate.add_argument('file')
        self._common(validate)

        analyze = sub.add_parser('analyze', help='Fixed space, ergodic projection and property suite.')
        analyze.add_argument('file')
        self._common(analyze)

        dilation = sub.add_parser('dilation', help='Minimality, complete isometry and lifting checks.')
        dilation.add_argument('file')
        dilation.add_argument('--levels', type=int, help='Matrix levels for the complete isometry check.')
        self._common(dilation)

        demo = sub.add_parser('demo', help='Write a problem file for an example family.')
        demo.add_argument('family', help=', '.join(services.DEMO_FAMILIES))
        demo.add_argument('--n', type=int)
        demo.add_argument('--m', type=int)
        demo.add_argument('--unitary', choices=['pauli-x', 'rotation', 'identity'])
        demo.add_argument('--theta', type=float)
        demo.add_argument('--gamma', type=float)
        demo.add_argument('--blocks', type=str)
        demo.add_argument('--terms', type=int)
        demo.add_argument('--d', type=int)
        demo.add_argument('--n-max', type=int)
        demo.add_argument('--m-max', type=int)
        self._common(demo)

    def handle(self, *args, **options):
        action = options['action']
        try:
            if action == 'demo':
                return self._demo(options)
            report = self._run(action, options)
        except (ParseError, UnknownFamily) as exc:
            raise CommandError(str(exc), returncode=2)

        if options.get('output'):
            Path(options['output']).write_text(report.to_json() + '\n', encoding='utf-8')
        if options.get('json'):
            # the table goes to stderr so stdout stays parseable
            self.stdout.write(report.to_json())
            self.stderr.write(report.as_table())
        else:
            self.stdout.write(report.as_table())

        code = report.exit_code
        out = self.stderr if options.get('json') else self.stdout
        summary = f"{action} {report.source}: {len(report.entries)} checks"
        if code == 0:
            out.write(self.style.SUCCESS(f"{summary}, all passed"))
            return
        failed = ', '.join(e.task for e in report.entries if not e.passed)
        if code == 1:
            out.write(self.style.WARNING(f"{summary}, failed: {failed}"))
        else:
            out.write(self.style.ERROR(f"{summary}, errors in: {failed}"))
        raise CommandError(f"{action} finished with exit code {code}", returncode=code)

    def _run(self, action, options):
        kwargs = {'seed': options.get('seed'), 'samples': options.get('samples')}
        if action == 'validate':
            return services.cmd_validate(options['file'], **kwargs)
        if action == 'analyze':
            return services.cmd_analyze(options['file'], **kwargs)
        return services.cmd_dilation(options['file'], levels=options.get('levels'), **kwargs)

    def _demo(self, options):
        params = {key: options.get(key) for key in ('n', 'm', 'unitary', 'theta', 'gamma', 'terms', 'd',
                                                    'n_max', 'm_max')}
        if options.get('blocks'):
            params['blocks'] = _blocks(options['blocks'])
        try:
            problem = services.cmd_demo(options['family'], seed=options.get('seed') or 0, **params)
        except (ValueError, CpfixError) as exc:
            raise CommandError(str(exc), returncode=2)
        text = json.dumps(problem, indent=2, sort_keys=True)
        if options.get('output'):
            Path(options['output']).write_text(text + '\n', encoding='utf-8')
            self.stdout.write(self.style.SUCCESS(f"wrote {options['family']} problem to {options['output']}"))
        else:
            self.stdout.write(text)
