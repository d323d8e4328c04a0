"""Link a list of parsed modules into one whole-program module.

Definitions override matching declarations; declarations with no definition
stay external.  When the same symbol is defined twice, structurally identical
copies are collapsed silently (first wins) and differing copies raise
:class:`DuplicateDefinition`.  Output ordering is deterministic: symbols are
sorted by name.
"""

from __future__ import annotations

from wasisurf.diagnostics import Diagnostics, emit
from wasisurf.errors import DuplicateDefinition
from wasisurf.ir.model import FunctionDecl, FunctionDef, GlobalVar, IrModule
from wasisurf.ir.parser import compute_address_taken


def link_modules(
    modules: list[IrModule],
    name: str = "linked",
    *,
    diags: Diagnostics | None = None,
) -> IrModule:
    functions: dict[str, FunctionDef] = {}
    declarations: dict[str, FunctionDecl] = {}
    globals_: dict[str, GlobalVar] = {}
    module_asm: list[str] = []
    type_table: dict[str, object] = {}

    for mod in modules:
        for tname, ty in mod.type_table.items():
            if tname in type_table:
                if type_table[tname] != ty:
                    emit(diags, "link", f"type '%{tname}' redefined differently; keeping first")
                continue
            type_table[tname] = ty
        module_asm.extend(mod.module_asm)
        for fn in mod.functions:
            existing = functions.get(fn.symbol)
            if existing is not None:
                if existing != fn:
                    raise DuplicateDefinition(fn.symbol)
                continue
            functions[fn.symbol] = fn
        for g in mod.globals:
            if g.initializer is None:
                # External global declaration: a definition elsewhere wins.
                if g.symbol not in globals_:
                    globals_[g.symbol] = g
                continue
            existing = globals_.get(g.symbol)
            if existing is not None and existing.initializer is not None:
                if existing != g:
                    raise DuplicateDefinition(g.symbol)
                continue
            globals_[g.symbol] = g
        for d in mod.declarations:
            if d.symbol not in declarations:
                declarations[d.symbol] = d

    # Definitions override declarations of the same symbol.
    for sym in list(declarations):
        if sym in functions:
            del declarations[sym]

    merged = IrModule(
        name=name,
        functions=[functions[s] for s in sorted(functions)],
        declarations=[declarations[s] for s in sorted(declarations)],
        globals=[globals_[s] for s in sorted(globals_)],
        module_asm=module_asm,
        type_table=dict(type_table),
    )
    compute_address_taken(merged)
    return merged
