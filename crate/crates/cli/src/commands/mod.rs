// SPDX-License-Identifier: Apache-2.0

pub mod amm;
pub mod convert;
pub mod dataflow;
pub mod dse;
pub mod simulate;
