"""Round-trip property: print(parse(text)) reparses to a structurally equal module."""

from __future__ import annotations

from pathlib import Path

import pytest

from wasisurf.ir import parse_module, print_module

FIXTURES = sorted((Path(__file__).parent / "fixtures").glob("*.ll"))

INLINE_CORPUS = [
    "define i64 @answer() {\nentry:\n  ret i64 0\n}\n",
    """
%Wrapper = type { ptr, ptr }
%DirEntry = type <{ i64, ptr }>

@vt = constant { ptr, i64, i64, ptr } { ptr @drop_it, i64 16, i64 8, ptr @m1 }, align 8
@msg = constant [4 x i8] c"hi\\0A\\00"
@indirect = global ptr null
@zeros = global [8 x i64] zeroinitializer

declare void @drop_it(ptr)
declare i64 @m1(ptr)
declare i32 @printf(ptr, ...)

define i64 @f(i64 %x, ptr %p) {
entry:
  %w = alloca %Wrapper, align 8
  %slot = getelementptr inbounds %Wrapper, ptr %w, i64 0, i32 0
  store ptr @m1, ptr %slot, align 8
  %fp = load ptr, ptr %slot, align 8
  %narrow = trunc i64 %x to i32
  %wide = zext i32 %narrow to i64
  %sum = add i64 %wide, 9
  %masked = and i64 %sum, 255
  %c = icmp sle i64 %masked, 100
  br i1 %c, label %yes, label %no
yes:
  %r1 = call i64 %fp(ptr %w)
  br label %join
no:
  %v = load i64, ptr getelementptr inbounds ([8 x i64], ptr @zeros, i64 0, i64 3)
  br label %join
join:
  %out = phi i64 [ %r1, %yes ], [ %v, %no ]
  switch i64 %out, label %done [ i64 0, label %yes ]
done:
  %fmt = call i32 (ptr, ...) @printf(ptr @msg, i64 %out)
  %weird = select i1 %c, i64 1, i64 2
  unreachable
}

module asm ".globl stack_switch"
""",
    """
define void @asmcall(i64 %n) {
entry:
  %r = call i64 asm sideeffect "syscall", "={ax},{ax},{di}"(i64 257, i64 %n)
  ret void
}
""",
]


@pytest.mark.parametrize("idx", range(len(INLINE_CORPUS)))
def test_roundtrip_inline(idx):
    module = parse_module(INLINE_CORPUS[idx], "m")
    text = print_module(module)
    again = parse_module(text, "m")
    assert module == again


@pytest.mark.parametrize("path", FIXTURES, ids=[p.name for p in FIXTURES])
def test_roundtrip_fixture_corpus(path):
    module = parse_module(path.read_text(), path.stem)
    text = print_module(module)
    again = parse_module(text, path.stem)
    assert module == again
