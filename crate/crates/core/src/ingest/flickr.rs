use roxmltree::{Document, Node};

use super::IngestError;
use crate::geo::GeoPoint;

/// One `<photo/>` row of a search response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPhotoStub {
    pub id: String,
    pub owner: String,
    pub title: String,
    pub is_public: bool,
}

/// A page of `flickr.photos.search` results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhotoSearchPage {
    pub page: u32,
    pub pages: u32,
    pub per_page: u32,
    pub total: u64,
    pub stubs: Vec<RawPhotoStub>,
}

/// The location entity returned for a single photo.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPhotoGeo {
    pub photo_id: String,
    pub location: GeoPoint,
    /// Flickr accuracy level, 1 (world) to 16 (street).
    pub accuracy: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhotoEntity {
    Search(PhotoSearchPage),
    Geo(RawPhotoGeo),
}

fn parse_document(payload: &str) -> Result<Document<'_>, IngestError> {
    Document::parse(payload).map_err(|e| IngestError::Xml(e.to_string()))
}

/// Returns the payload element, looking through an optional `<rsp>` envelope.
fn payload_root<'a, 'i>(doc: &'a Document<'i>) -> Result<Node<'a, 'i>, IngestError> {
    let root = doc.root_element();
    if root.tag_name().name() != "rsp" {
        return Ok(root);
    }
    if let Some(stat) = root.attribute("stat") {
        if stat != "ok" {
            let err = root.children().find(|n| n.has_tag_name("err"));
            return Err(IngestError::Api {
                code: err.and_then(|e| e.attribute("code")).unwrap_or("?").to_owned(),
                message: err.and_then(|e| e.attribute("msg")).unwrap_or(stat).to_owned(),
            });
        }
    }
    root.children()
        .find(Node::is_element)
        .ok_or_else(|| IngestError::schema("rsp", "empty response envelope"))
}

fn required<'a>(node: &Node<'a, '_>, name: &str) -> Result<&'a str, IngestError> {
    node.attribute(name)
        .ok_or_else(|| IngestError::schema(name, format!("missing attribute on <{}>", node.tag_name().name())))
}

fn number<T: std::str::FromStr>(node: &Node<'_, '_>, name: &str) -> Result<T, IngestError> {
    let raw = required(node, name)?;
    raw.trim()
        .parse()
        .map_err(|_| IngestError::schema(name, format!("`{raw}` is not a valid number")))
}

fn flag(node: &Node<'_, '_>, name: &str) -> Result<bool, IngestError> {
    match required(node, name)?.trim() {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(IngestError::range(name, other)),
    }
}

fn positive(name: &str, value: u32) -> Result<u32, IngestError> {
    if value == 0 {
        return Err(IngestError::range(name, value));
    }
    Ok(value)
}

fn search_page(node: Node<'_, '_>) -> Result<PhotoSearchPage, IngestError> {
    let page = positive("page", number(&node, "page")?)?;
    let pages = positive("pages", number(&node, "pages")?)?;
    let per_page = positive("perpage", number(&node, "perpage")?)?;
    let total = number(&node, "total")?;
    if page > pages {
        return Err(IngestError::range("page", format!("{page} > pages {pages}")));
    }

    let mut stubs = Vec::new();
    for photo in node.children().filter(|n| n.has_tag_name("photo")) {
        let id = required(&photo, "id")?;
        if id.is_empty() {
            return Err(IngestError::schema("id", "empty photo id"));
        }
        stubs.push(RawPhotoStub {
            id: id.to_owned(),
            owner: required(&photo, "owner")?.to_owned(),
            title: required(&photo, "title")?.to_owned(),
            is_public: flag(&photo, "ispublic")?,
        });
    }
    if stubs.len() > per_page as usize {
        return Err(IngestError::range(
            "perpage",
            format!("{} photos on a page of {per_page}", stubs.len()),
        ));
    }
    Ok(PhotoSearchPage {
        page,
        pages,
        per_page,
        total,
        stubs,
    })
}

fn photo_geo(node: Node<'_, '_>) -> Result<RawPhotoGeo, IngestError> {
    let photo_id = required(&node, "id")?;
    if photo_id.is_empty() {
        return Err(IngestError::schema("id", "empty photo id"));
    }
    let location = node
        .children()
        .find(|n| n.has_tag_name("location"))
        .ok_or_else(|| IngestError::schema("location", "missing <location> element"))?;
    let lat: f64 = number(&location, "latitude")?;
    let lon: f64 = number(&location, "longitude")?;
    if !(-90.0..=90.0).contains(&lat) {
        return Err(IngestError::range("latitude", lat));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(IngestError::range("longitude", lon));
    }
    let accuracy: i64 = number(&location, "accuracy")?;
    if !(1..=16).contains(&accuracy) {
        return Err(IngestError::range("accuracy", accuracy));
    }
    Ok(RawPhotoGeo {
        photo_id: photo_id.to_owned(),
        location: GeoPoint::new(lat, lon)?,
        accuracy: accuracy as u8,
    })
}

/// Parses a `<photos page=.. pages=.. perpage=.. total=..>` search entity.
pub fn parse_photo_search(payload: &str) -> Result<PhotoSearchPage, IngestError> {
    let doc = parse_document(payload)?;
    let root = payload_root(&doc)?;
    if !root.has_tag_name("photos") {
        return Err(IngestError::schema(
            "photos",
            format!("expected <photos>, found <{}>", root.tag_name().name()),
        ));
    }
    search_page(root)
}

/// Parses a `<photo id=..><location .../></photo>` geo entity.
pub fn parse_photo_geo(payload: &str) -> Result<RawPhotoGeo, IngestError> {
    let doc = parse_document(payload)?;
    let root = payload_root(&doc)?;
    if !root.has_tag_name("photo") {
        return Err(IngestError::schema(
            "photo",
            format!("expected <photo>, found <{}>", root.tag_name().name()),
        ));
    }
    photo_geo(root)
}

/// Parses either entity, dispatching on the root element.
pub fn parse_photo_entity(payload: &str) -> Result<PhotoEntity, IngestError> {
    let doc = parse_document(payload)?;
    let root = payload_root(&doc)?;
    match root.tag_name().name() {
        "photos" => search_page(root).map(PhotoEntity::Search),
        "photo" => photo_geo(root).map(PhotoEntity::Geo),
        other => Err(IngestError::schema("root", format!("unexpected <{other}> element"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_search_page() {
        let page = parse_photo_search("<photos page='1' pages='1' perpage='10' total='0'/>").unwrap();
        assert_eq!((page.page, page.pages, page.per_page, page.total), (1, 1, 10, 0));
        assert!(page.stubs.is_empty());
    }

    #[test]
    fn attribute_order_is_irrelevant() {
        let page = parse_photo_search(
            r#"<photos total="3" perpage="5" pages="1" page="1">
                 <photo ispublic="0" title="t" owner="o" id="9"/>
               </photos>"#,
        )
        .unwrap();
        assert_eq!(page.stubs[0].id, "9");
        assert!(!page.stubs[0].is_public);
    }

    #[test]
    fn missing_photo_id() {
        let err = parse_photo_search(
            r#"<photos page="1" pages="1" perpage="10" total="1"><photo owner="o" title="t" ispublic="1"/></photos>"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, IngestError::Schema { ref field, .. } if field == "id"),
            "{err}"
        );
    }

    #[test]
    fn missing_page_attribute_is_named() {
        let err = parse_photo_search("<photos page='1' perpage='10' total='0'/>").unwrap_err();
        assert!(
            matches!(err, IngestError::Schema { ref field, .. } if field == "pages"),
            "{err}"
        );
    }

    #[test]
    fn more_photos_than_per_page() {
        let xml = r#"<photos page="1" pages="1" perpage="1" total="2">
            <photo id="1" owner="o" title="a" ispublic="1"/><photo id="2" owner="o" title="b" ispublic="1"/>
        </photos>"#;
        assert!(matches!(parse_photo_search(xml), Err(IngestError::Range { .. })));
    }

    #[test]
    fn malformed_xml() {
        assert!(matches!(
            parse_photo_search("<photos page='1'"),
            Err(IngestError::Xml(_))
        ));
        assert!(matches!(
            parse_photo_geo("<photo id='1'><location></photo>"),
            Err(IngestError::Xml(_))
        ));
    }

    #[test]
    fn accuracy_and_latitude_ranges() {
        let zero = r#"<photo id="1"><location latitude="6.2" longitude="-75.5" accuracy="0"/></photo>"#;
        assert!(matches!(parse_photo_geo(zero), Err(IngestError::Range { field, .. }) if field == "accuracy"));
        let high = r#"<photo id="1"><location latitude="95" longitude="-75.5" accuracy="6"/></photo>"#;
        assert!(matches!(parse_photo_geo(high), Err(IngestError::Range { field, .. }) if field == "latitude"));
        let missing = r#"<photo id="1"/>"#;
        assert!(matches!(parse_photo_geo(missing), Err(IngestError::Schema { field, .. }) if field == "location"));
    }

    #[test]
    fn response_envelope() {
        let ok = r#"<rsp stat="ok"><photo id="7"><location latitude="1" longitude="2" accuracy="16"/></photo></rsp>"#;
        assert_eq!(parse_photo_geo(ok).unwrap().accuracy, 16);
        let fail = r#"<rsp stat="fail"><err code="2" msg="Photo has no location information"/></rsp>"#;
        assert!(matches!(parse_photo_entity(fail), Err(IngestError::Api { code, .. }) if code == "2"));
    }
}
