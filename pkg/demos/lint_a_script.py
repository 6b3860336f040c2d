"""
Parsing and linting a Cybug script
==================================

Load the bundled corpus bot, see what the lenient parser recovered from,
then ask the linter which parts of the script can never run.
"""

from cybug import build_cfg, lint, parse
from cybug.lang import format_diagnostic, unreachable_regions
from cybug.runner import builtin_source

source = builtin_source("ghazu_corpus")
program, diagnostics = parse(source)
print(program.name, len(program), "instructions, labels:", program.labels)

# Lenient mode keeps going; each recovery is reported.
for d in diagnostics:
    print(format_diagnostic(d, "ghazu.cb"))

# Strict mode turns recoveries into errors.
_, strict = parse(source, "strict")
print(sum(d.severity == "error" for d in strict), "errors in strict mode")

# The control-flow graph works at instruction level.
cfg = build_cfg(program)
print("reachable:", sorted(i for i in cfg.reachable() if i >= 0))

for region in unreachable_regions(program):
    print(f"dead block {region.start}..{region.stop - 1}:")
    for i in region:
        print("   ", program.instructions[i])

for d in lint(program):
    print(format_diagnostic(d, "ghazu.cb"))
