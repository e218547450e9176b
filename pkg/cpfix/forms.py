import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path

from django import forms

from . import codec
from .conf import ToolkitConfig
from .exceptions import ParseError
from .vnalg import BlockStructure

logger = logging.getLogger(__name__)

SUPPORTED_VERSIONS = ('1',)
MAP_KINDS = ('cp', 'endomorphism')
TASK_EXPECTATIONS = {
    'phi_limit': ('converge', 'diverge'),
    'lift': ('lift',),
    'minimality': ('minimal', 'non-minimal'),
}
CONFIG_KEYS = tuple(f.name for f in fields(ToolkitConfig))


def _invalid(message, path):
    return forms.ValidationError(message, code='invalid', params={'path': path})


@dataclass
class NamedMap:
    name: str
    kind: str
    cpmap: object


@dataclass
class Problem:
    version: str
    structure: BlockStructure
    maps: list
    projection: object = None
    tasks: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    source: str = ''

    @property
    def generators(self):
        return [m.cpmap for m in self.maps]


class ProblemFileForm(forms.Form):
    """Schema of a problem file; ``data`` is the decoded JSON object."""

    version = forms.CharField(max_length=16)
    algebra = forms.JSONField()
    maps = forms.JSONField()
    projection = forms.JSONField(required=False)
    tasks = forms.JSONField(required=False)
    config = forms.JSONField(required=False)

    def clean_version(self):
        version = self.cleaned_data['version']
        if version not in SUPPORTED_VERSIONS:
            raise _invalid(f"unsupported version {version!r}", 'version')
        return version

    def clean_algebra(self):
        algebra = self.cleaned_data['algebra']
        if not isinstance(algebra, dict) or 'blocks' not in algebra:
            raise _invalid("expected an object with a 'blocks' list", 'algebra')
        blocks = algebra['blocks']
        if not isinstance(blocks, list) or not blocks:
            raise _invalid("expected a non-empty list of block sizes", 'algebra.blocks')
        for k, n in enumerate(blocks):
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                raise _invalid("block sizes must be positive integers", f"algebra.blocks[{k}]")
        return BlockStructure(tuple(blocks))

    def clean_maps(self):
        maps = self.cleaned_data['maps']
        if not isinstance(maps, list) or not maps:
            raise _invalid("expected a non-empty list of maps", 'maps')
        names = set()
        for k, entry in enumerate(maps):
            path = f"maps[{k}]"
            if not isinstance(entry, dict):
                raise _invalid("expected an object", path)
            name = entry.get('name', f"map{k}")
            if not isinstance(name, str) or not name:
                raise _invalid("map names must be non-empty strings", f"{path}.name")
            if name in names:
                raise _invalid(f"duplicate map name {name!r}", f"{path}.name")
            names.add(name)
            if entry.get('kind', 'cp') not in MAP_KINDS:
                raise _invalid(f"kind must be one of {', '.join(MAP_KINDS)}", f"{path}.kind")
            if not isinstance(entry.get('kraus'), dict):
                raise _invalid("expected an object of Kraus lists", f"{path}.kraus")
        return maps

    def clean_tasks(self):
        tasks = self.cleaned_data['tasks'] or []
        if not isinstance(tasks, list):
            raise _invalid("expected a list of tasks", 'tasks')
        for k, task in enumerate(tasks):
            path = f"tasks[{k}]"
            if not isinstance(task, dict) or task.get('task') not in TASK_EXPECTATIONS:
                raise _invalid(f"task must be one of {', '.join(TASK_EXPECTATIONS)}", f"{path}.task")
            allowed = TASK_EXPECTATIONS[task['task']]
            if task.get('expect', allowed[0]) not in allowed:
                raise _invalid(f"expect must be one of {', '.join(allowed)}", f"{path}.expect")
            if task['task'] != 'minimality' and 'element' not in task:
                raise _invalid("this task needs an 'element'", f"{path}.element")
        return tasks

    def clean_config(self):
        config = self.cleaned_data['config'] or {}
        if not isinstance(config, dict):
            raise _invalid("expected an object of overrides", 'config')
        cleaned = {}
        for key, value in config.items():
            name = str(key).lower()
            if name not in CONFIG_KEYS:
                raise _invalid(f"unknown setting {key!r}", f"config.{key}")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise _invalid("expected a number", f"config.{key}")
            cleaned[name] = value
        return cleaned

    def clean(self):
        cleaned = super().clean()
        structure = cleaned.get('algebra')
        maps = cleaned.get('maps')
        if structure is None or maps is None:
            return cleaned
        decoded = []
        for k, entry in enumerate(maps):
            try:
                cpmap = codec.decode_kraus(entry['kraus'], structure, f"maps[{k}].kraus")
            except ParseError as exc:
                self.add_error('maps', _invalid(exc.message, exc.path))
                return cleaned
            decoded.append(NamedMap(entry.get('name', f"map{k}"), entry.get('kind', 'cp'), cpmap))
        cleaned['maps'] = decoded

        projection = cleaned.get('projection')
        if projection is not None:
            try:
                cleaned['projection'] = codec.decode_element(projection, structure, 'projection')
            except ParseError as exc:
                self.add_error('projection', _invalid(exc.message, exc.path))
        return cleaned


def form_error(form):
    """Flatten the errors of an invalid form into one ``ParseError`` (first path wins)."""
    paths, messages = [], []
    for name, errors in form.errors.as_data().items():
        for err in errors:
            path = (err.params or {}).get('path', name if name != '__all__' else '')
            paths.append(path)
            messages.append(f"{path}: {err.messages[0]}" if path else err.messages[0])
    error = ParseError('; '.join(messages))
    error.path = paths[0] if paths else None
    return error


def parse_problem(data, source=''):
    if not isinstance(data, dict):
        raise ParseError("a problem file must hold a JSON object", source or None)
    form = ProblemFileForm(data=data)
    if not form.is_valid():
        error = form_error(form)
        logger.debug("problem file %s rejected: %s", source, error)
        raise error
    c = form.cleaned_data
    return Problem(version=c['version'], structure=c['algebra'], maps=c['maps'],
                   projection=c.get('projection'), tasks=c.get('tasks') or [],
                   config=c.get('config') or {}, source=source)


def load_problem(path):
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at line {exc.lineno} column {exc.colno}", str(path)) from exc
    return parse_problem(data, str(path))


def problem_to_dict(structure, maps, projection=None, tasks=(), config=None):
    """Problem file contents; ``maps`` is a list of ``NamedMap``."""
    out = {
        'version': SUPPORTED_VERSIONS[-1],
        'algebra': {'blocks': list(structure.block_dims)},
        'maps': [codec.encode_map(m.name, m.kind, m.cpmap) for m in maps],
    }
    if projection is not None:
        out['projection'] = codec.encode_element(projection)
    if tasks:
        out['tasks'] = list(tasks)
    if config:
        out['config'] = dict(config)
    return out
