#!/usr/bin/env python
# -*- coding: utf-8 -*-

from pathlib import Path
import PyPURC


__all__ = [
    'root_path',
    'project_path',
    'version_path',
    'data_path',
    'networks_path',
    'scenarios_path',
    'doc_path',
    'examples_path',
    'doc_css_path',
]

root_path = Path(PyPURC.__path__[0])

project_path = root_path.parents[0]

version_path = root_path.joinpath('VERSION')

data_path = root_path.joinpath('data')

networks_path = data_path.joinpath('networks')

scenarios_path = data_path.joinpath('scenarios')

doc_path = project_path.joinpath('docs')

examples_path = doc_path.joinpath('examples')

doc_css_path = doc_path.joinpath('source/_static/default.css')


if __name__ == '__main__':
    for path_name in __all__:
        path = locals()[path_name]
        print(path)
        assert path.exists(), f"Path {path_name} do not exists"

# -
