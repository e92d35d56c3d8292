use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PAGE_SIZE: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("page number and page size must both be at least 1")]
pub struct PageError;

/// One page of an ordered listing, with the human-readable position line.
///
/// On the wire the page number and total are echoed as `page` and `total`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page<T> {
    pub items: Vec<T>,
    #[serde(rename = "page")]
    pub page_number: u32,
    pub page_size: u32,
    #[serde(rename = "total")]
    pub total_count: u64,
    pub display: String,
}

impl<T> Page<T> {
    pub fn map<U>(self, f: impl FnMut(T) -> U) -> Page<U> {
        Page {
            items: self.items.into_iter().map(f).collect(),
            page_number: self.page_number,
            page_size: self.page_size,
            total_count: self.total_count,
            display: self.display,
        }
    }
}

/// `Displaying {first}-{last} of {total} result(s).`, or `0-0` for an empty page.
pub fn display_line(page_number: u32, page_size: u32, len: usize, total: u64) -> String {
    if len == 0 {
        return format!("Displaying 0-0 of {total} result(s).");
    }
    let first = (u64::from(page_number) - 1) * u64::from(page_size) + 1;
    let last = first + len as u64 - 1;
    format!("Displaying {first}-{last} of {total} result(s).")
}

/// Cut the `page_number`-th page (1-indexed) of `page_size` out of `items`.
pub fn paginate<T: Clone>(
    items: &[T],
    page_number: u32,
    page_size: u32,
) -> Result<Page<T>, PageError> {
    if page_number < 1 || page_size < 1 {
        return Err(PageError);
    }
    let start = (u64::from(page_number) - 1) * u64::from(page_size);
    let slice: &[T] = match usize::try_from(start) {
        Ok(start) if start < items.len() => {
            let end = start.saturating_add(page_size as usize).min(items.len());
            &items[start..end]
        }
        _ => &[],
    };
    let total = items.len() as u64;
    Ok(Page {
        display: display_line(page_number, page_size, slice.len(), total),
        items: slice.to_vec(),
        page_number,
        page_size,
        total_count: total,
    })
}
