//! Online Retail II export ingestion.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};

use super::TransactionRecord;
use crate::error::{Error, Result};

/// Row filter applied while reading an Online Retail II export.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RetailFilter {
    pub country: Option<String>,
    /// Inclusive calendar-date bounds on `InvoiceDate`.
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    /// Customers with fewer distinct purchased items are dropped.
    pub min_items_per_customer: usize,
}

impl RetailFilter {
    /// UK customers, May to August 2011, at least 20 distinct items.
    pub fn uk_summer_2011() -> Self {
        RetailFilter {
            country: Some("United Kingdom".into()),
            start: NaiveDate::from_ymd_opt(2011, 5, 1),
            end: NaiveDate::from_ymd_opt(2011, 8, 31),
            min_items_per_customer: 20,
        }
    }

    fn admits(&self, country: &str, date: NaiveDate) -> bool {
        self.country.as_deref().is_none_or(|c| c == country)
            && self.start.is_none_or(|s| date >= s)
            && self.end.is_none_or(|e| date <= e)
    }
}

const STOCK_CODE: &[&str] = &["StockCode"];
const QUANTITY: &[&str] = &["Quantity"];
const INVOICE_DATE: &[&str] = &["InvoiceDate"];
const PRICE: &[&str] = &["Price", "UnitPrice"];
const CUSTOMER: &[&str] = &["Customer ID", "CustomerID"];
const COUNTRY: &[&str] = &["Country"];

pub(super) fn is_retail_header(headers: &csv::StringRecord) -> bool {
    let has = |name: &str| headers.iter().any(|h| h == name);
    has("Invoice") || has("InvoiceNo") || has("StockCode")
}

fn parse_datetime(raw: &str) -> Option<NaiveDateTime> {
    const FORMATS: &[&str] = &[
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
        "%m/%d/%Y %H:%M",
        "%m/%d/%Y %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
}

/// `"13085.0"` and `"13085"` name the same customer.
fn normalize_customer(raw: &str) -> &str {
    raw.strip_suffix(".0").unwrap_or(raw)
}

/// Read retained purchases from an Online Retail II CSV export.
///
/// Rows without a customer, or with non-positive quantity or price, are
/// dropped (returns are not netted). The filter's country and date range are
/// then applied, and finally customers with fewer than
/// `min_items_per_customer` distinct items are removed. Expenditure is
/// `Quantity × Price`.
pub fn ingest_retail_csv(path: &Path, filter: &RetailFilter) -> Result<Vec<TransactionRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, 0, "file", e))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::csv(path, 1, "header", e))?
        .clone();
    let find = |names: &[&str]| -> Result<usize> {
        headers
            .iter()
            .position(|h| names.contains(&h))
            .ok_or_else(|| Error::csv(path, 1, names[0], "missing required column"))
    };
    let c_stock = find(STOCK_CODE)?;
    let c_qty = find(QUANTITY)?;
    let c_date = find(INVOICE_DATE)?;
    let c_price = find(PRICE)?;
    let c_cust = find(CUSTOMER)?;
    let c_country = find(COUNTRY)?;

    let mut kept = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::csv(path, line, "record", e))?;
        let field = |c: usize| row.get(c).unwrap_or("");
        let number = |c: usize, name: &str| -> Result<f64> {
            let raw = field(c);
            raw.parse::<f64>()
                .map_err(|e| Error::csv(path, line, name, format!("{raw:?}: {e}")))
        };
        let quantity = number(c_qty, QUANTITY[0])?;
        let price = number(c_price, PRICE[0])?;
        let raw_date = field(c_date);
        let date = parse_datetime(raw_date)
            .ok_or_else(|| {
                Error::csv(path, line, INVOICE_DATE[0], format!("unparseable date {raw_date:?}"))
            })?
            .date();
        let customer = normalize_customer(field(c_cust));
        if customer.is_empty() || quantity <= 0.0 || price <= 0.0 {
            continue;
        }
        if !filter.admits(field(c_country), date) {
            continue;
        }
        kept.push(TransactionRecord::priced(customer, field(c_stock), quantity, price));
    }

    if filter.min_items_per_customer > 0 {
        let mut distinct: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for r in &kept {
            distinct.entry(&r.user_id).or_default().insert(&r.item_id);
        }
        let eligible: BTreeSet<String> = distinct
            .into_iter()
            .filter(|(_, items)| items.len() >= filter.min_items_per_customer)
            .map(|(u, _)| u.to_string())
            .collect();
        kept.retain(|r| eligible.contains(&r.user_id));
    }
    Ok(kept)
}
