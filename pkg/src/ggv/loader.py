"""Turning source files into internal terms ready to run."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Dict, Optional

from . import syntax as s
from .embed import check_embedding
from .parser import parse_program
from .typer import LabelAllocator, Typer, check_program
from .types import Dyn, Type


@dataclass
class Compiled:
    term: s.Term
    type: Type
    labels: LabelAllocator
    source: s.Term


def compile_source(src: str, untyped: bool = False, name: str = "<input>",
                   base_dir: str = ".", read=None) -> Compiled:
    """Parse, check and translate one program; typed imports are embedded."""
    read = read or _read
    labels = LabelAllocator(name)
    prog = parse_program(src, untyped=untyped)
    if untyped:
        term = check_embedding(prog.body, labels=labels)
        return Compiled(term, Dyn, labels, prog.body)
    env: Dict[str, Type] = {imp.name: Dyn for imp in prog.imports}
    t = check_program(prog.body, env)
    _, _, term = Typer(labels).go(dict(env), prog.body)
    embedded = []
    for imp in prog.imports:
        path = os.path.join(base_dir, imp.path)
        usrc = read(path)
        labels.source = imp.path
        uprog = parse_program(usrc, untyped=True)
        embedded.append((imp.name, check_embedding(uprog.body, labels=labels)))
    labels.source = name
    for iname, f in reversed(embedded):
        term = s.Let(iname, f, term)
    return Compiled(term, t, labels, prog.body)


def compile_file(path: str, untyped: Optional[bool] = None) -> Compiled:
    if untyped is None:
        untyped = path.endswith(".ugv")
    src = _read(path)
    return compile_source(src, untyped, os.path.basename(path), os.path.dirname(path) or ".")


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()
