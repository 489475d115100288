//! Chapters of the guide in `book/`, compiled here so their snippets run as
//! doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/systems.md")]
pub mod systems {}
#[doc = include_str!("../../../book/src/channels.md")]
pub mod channels {}
#[doc = include_str!("../../../book/src/entropies.md")]
pub mod entropies {}
#[doc = include_str!("../../../book/src/koashi_imoto.md")]
pub mod koashi_imoto {}
#[doc = include_str!("../../../book/src/rates.md")]
pub mod rates {}
#[doc = include_str!("../../../book/src/protocols.md")]
pub mod protocols {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
