# Copyright 2026 The pugd-lab Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the pugd optimizer laboratory."""

from ._pugd import (  # noqa: F401
    Mlp,
    RaggedTensor,
    StepRecord,
    check_bounded_difference,
    dual_norm,
    linspace,
    lr_at,
    optimizer_kinds,
    optimizer_step,
    run_config,
    run_invariant_checks,
    unit,
    __version__,
)
