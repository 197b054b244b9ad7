use scraper::{ElementRef, Html, Selector};

/// Counts of the structural elements of one HTML document.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct StructuralCounts {
    pub images: u64,
    /// External scripts only (`script` elements with a `src` attribute).
    pub script_files: u64,
    /// `link` elements whose `rel` contains `stylesheet`.
    pub css_files: u64,
    pub tables: u64,
    pub iframes: u64,
    pub style_tags: u64,
}

/// Counts elements in the parser-recovered DOM of `html`. Malformed markup
/// is repaired by the HTML5 tree builder before counting. Content of
/// `<template>` elements is inert and not counted.
pub fn extract_metrics(html: &str) -> StructuralCounts {
    let doc = Html::parse_document(html);
    let count = |css: &str| {
        let sel = Selector::parse(css).expect("static selector");
        doc.select(&sel).filter(is_live).count() as u64
    };
    let link_sel = Selector::parse("link[rel]").expect("static selector");
    let css_files = doc
        .select(&link_sel)
        .filter(is_live)
        .filter(|e| {
            e.value()
                .attr("rel")
                .map(|rel| {
                    rel.split_ascii_whitespace()
                        .any(|t| t.eq_ignore_ascii_case("stylesheet"))
                })
                .unwrap_or(false)
        })
        .count() as u64;

    StructuralCounts {
        images: count("img"),
        script_files: count("script[src]"),
        css_files,
        tables: count("table"),
        iframes: count("iframe"),
        style_tags: count("style"),
    }
}

/// The parser keeps template content in the tree; browsers never render it.
fn is_live(e: &ElementRef<'_>) -> bool {
    !e.ancestors()
        .filter_map(ElementRef::wrap)
        .any(|a| a.value().name() == "template")
}
