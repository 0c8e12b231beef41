//! Loader for the Open University Learning Analytics dataset (OULAD), one
//! course module at a time.
//!
//! The prediction task: finish the module with Pass or Distinction. Outcomes
//! are also kept as an ordinal score (Withdrawn 0, Fail 1, Pass 2,
//! Distinction 3) with the pass line between Fail and Pass, `gender` is the
//! sensitive attribute with men as the unprivileged group, and each student's
//! row combines the enrolment profile with activity counts derived from the
//! clickstream and assessment tables.

use crate::data::{Dataset, Feature, FeatureData};
use crate::error::Error;
use crate::Result;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

/// The enrolment-profile columns, in feature order. These come straight from
/// the student table; every other feature is derived.
pub const PROFILE_FEATURES: [&str; 9] = [
    "code_presentation",
    "gender",
    "region",
    "highest_education",
    "imd_band",
    "age_band",
    "num_of_prev_attempts",
    "studied_credits",
    "disability",
];

/// Clickstream activity types that get their own click-count feature.
const TRACKED_ACTIVITIES: [&str; 4] = ["forumng", "glossary", "homepage", "resource"];

const SCORE_THRESHOLD: f64 = 1.5;

/// Paths to the five OULAD tables a load needs.
#[derive(Debug, Clone)]
pub struct OuladFiles {
    pub student_info: PathBuf,
    pub student_vle: PathBuf,
    pub vle: PathBuf,
    pub student_assessment: PathBuf,
    pub assessments: PathBuf,
}

impl OuladFiles {
    /// The standard file names, all inside one directory.
    pub fn in_dir(dir: &Path) -> Self {
        OuladFiles {
            student_info: dir.join("studentInfo.csv"),
            student_vle: dir.join("studentVle.csv"),
            vle: dir.join("vle.csv"),
            student_assessment: dir.join("studentAssessment.csv"),
            assessments: dir.join("assessments.csv"),
        }
    }

    /// Errors with the first missing path, so callers can report exactly
    /// which source file to fetch.
    pub fn check(&self) -> Result<()> {
        for path in [
            &self.student_info,
            &self.student_vle,
            &self.vle,
            &self.student_assessment,
            &self.assessments,
        ] {
            if !path.exists() {
                return Err(Error::MissingInput(path.display().to_string()));
            }
        }
        Ok(())
    }
}

struct Table {
    reader: csv::Reader<File>,
    columns: HashMap<String, usize>,
    path: PathBuf,
}

impl Table {
    fn open(path: &Path) -> Result<Table> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let columns = reader
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').trim().to_string(), i))
            .collect();
        Ok(Table {
            reader,
            columns,
            path: path.to_path_buf(),
        })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.columns.get(name).copied().ok_or_else(|| {
            Error::InvalidInput(format!("{} has no {name:?} column", self.path.display()))
        })
    }

    /// Streams records with their 1-based data row number.
    fn rows(&mut self) -> impl Iterator<Item = csv::Result<(usize, csv::StringRecord)>> + '_ {
        self.reader
            .records()
            .enumerate()
            .map(|(i, r)| r.map(|rec| (i + 2, rec)))
    }
}

fn cell(record: &csv::StringRecord, idx: usize) -> &str {
    record.get(idx).unwrap_or("").trim()
}

fn parse_num<T: std::str::FromStr>(
    value: &str,
    what: &str,
    path: &Path,
    row: usize,
) -> Result<T> {
    value.parse().map_err(|_| {
        Error::InvalidInput(format!(
            "{} row {row}: {what} {value:?} is not a number",
            path.display()
        ))
    })
}

struct StudentRow {
    id: u64,
    /// The nine profile cells, in [`PROFILE_FEATURES`] order.
    profile: Vec<String>,
    final_result: String,
}

/// Reads the student table filtered to one module. A student enrolled in
/// several presentations keeps only the latest one; rows with any empty
/// profile or outcome cell are dropped as incomplete records.
fn read_students(path: &Path, module: &str) -> Result<Vec<StudentRow>> {
    let mut table = Table::open(path)?;
    let module_col = table.col("code_module")?;
    let id_col = table.col("id_student")?;
    let result_col = table.col("final_result")?;
    let profile_cols: Vec<usize> = PROFILE_FEATURES
        .iter()
        .map(|name| table.col(name))
        .collect::<Result<_>>()?;
    let path = table.path.clone();
    let mut rows: Vec<StudentRow> = Vec::new();
    let mut by_id: HashMap<u64, usize> = HashMap::new();
    for item in table.rows() {
        let (row_no, record) = item?;
        if cell(&record, module_col) != module {
            continue;
        }
        let profile: Vec<String> = profile_cols
            .iter()
            .map(|&c| cell(&record, c).to_string())
            .collect();
        let final_result = cell(&record, result_col).to_string();
        if profile.iter().any(String::is_empty) || final_result.is_empty() {
            continue;
        }
        let id: u64 = parse_num(cell(&record, id_col), "student id", &path, row_no)?;
        let row = StudentRow {
            id,
            profile,
            final_result,
        };
        match by_id.get(&id) {
            // Presentation codes like 2013J order chronologically as strings.
            Some(&at) if rows[at].profile[0] >= row.profile[0] => {}
            Some(&at) => rows[at] = row,
            None => {
                by_id.insert(id, rows.len());
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

#[derive(Default)]
struct Activity {
    clicks: f64,
    days: HashSet<i64>,
    by_type: [f64; 4],
    tma: f64,
    cma: f64,
}

fn read_activity(
    files: &OuladFiles,
    module: &str,
    kept: &HashMap<u64, String>,
) -> Result<HashMap<u64, Activity>> {
    let mut acc: HashMap<u64, Activity> = HashMap::new();

    let mut sites = Table::open(&files.vle)?;
    let (site_col, mod_col, pres_col, type_col) = (
        sites.col("id_site")?,
        sites.col("code_module")?,
        sites.col("code_presentation")?,
        sites.col("activity_type")?,
    );
    let path = sites.path.clone();
    let mut site_type: HashMap<(u64, String), usize> = HashMap::new();
    for item in sites.rows() {
        let (row_no, record) = item?;
        if cell(&record, mod_col) != module {
            continue;
        }
        if let Some(t) = TRACKED_ACTIVITIES
            .iter()
            .position(|a| *a == cell(&record, type_col))
        {
            let site: u64 = parse_num(cell(&record, site_col), "site id", &path, row_no)?;
            site_type.insert((site, cell(&record, pres_col).to_string()), t);
        }
    }

    let mut clicks = Table::open(&files.student_vle)?;
    let (mod_col, pres_col, id_col, site_col, date_col, click_col) = (
        clicks.col("code_module")?,
        clicks.col("code_presentation")?,
        clicks.col("id_student")?,
        clicks.col("id_site")?,
        clicks.col("date")?,
        clicks.col("sum_click")?,
    );
    let path = clicks.path.clone();
    for item in clicks.rows() {
        let (row_no, record) = item?;
        if cell(&record, mod_col) != module {
            continue;
        }
        let id: u64 = parse_num(cell(&record, id_col), "student id", &path, row_no)?;
        let presentation = cell(&record, pres_col);
        if kept.get(&id).map(String::as_str) != Some(presentation) {
            continue;
        }
        let sum_click: f64 = parse_num(cell(&record, click_col), "click count", &path, row_no)?;
        let date: i64 = parse_num(cell(&record, date_col), "day", &path, row_no)?;
        let site: u64 = parse_num(cell(&record, site_col), "site id", &path, row_no)?;
        let a = acc.entry(id).or_default();
        a.clicks += sum_click;
        a.days.insert(date);
        if let Some(&t) = site_type.get(&(site, presentation.to_string())) {
            a.by_type[t] += sum_click;
        }
    }

    let mut defs = Table::open(&files.assessments)?;
    let (mod_col, pres_col, asmt_col, type_col) = (
        defs.col("code_module")?,
        defs.col("code_presentation")?,
        defs.col("id_assessment")?,
        defs.col("assessment_type")?,
    );
    let path = defs.path.clone();
    let mut asmt: HashMap<u64, (String, String)> = HashMap::new();
    for item in defs.rows() {
        let (row_no, record) = item?;
        if cell(&record, mod_col) != module {
            continue;
        }
        let id: u64 = parse_num(cell(&record, asmt_col), "assessment id", &path, row_no)?;
        asmt.insert(
            id,
            (
                cell(&record, pres_col).to_string(),
                cell(&record, type_col).to_string(),
            ),
        );
    }

    let mut submissions = Table::open(&files.student_assessment)?;
    let (asmt_col, id_col) = (
        submissions.col("id_assessment")?,
        submissions.col("id_student")?,
    );
    let path = submissions.path.clone();
    for item in submissions.rows() {
        let (row_no, record) = item?;
        let asmt_id: u64 =
            parse_num(cell(&record, asmt_col), "assessment id", &path, row_no)?;
        let Some((presentation, kind)) = asmt.get(&asmt_id) else {
            continue;
        };
        let id: u64 = parse_num(cell(&record, id_col), "student id", &path, row_no)?;
        if kept.get(&id) != Some(presentation) {
            continue;
        }
        match kind.as_str() {
            "TMA" => acc.entry(id).or_default().tma += 1.0,
            "CMA" => acc.entry(id).or_default().cma += 1.0,
            _ => {}
        }
    }

    Ok(acc)
}

fn outcome_score(result: &str, path: &Path) -> Result<f64> {
    Ok(match result {
        "Withdrawn" => 0.0,
        "Fail" => 1.0,
        "Pass" => 2.0,
        "Distinction" => 3.0,
        other => {
            return Err(Error::InvalidInput(format!(
                "{} has unknown final result {other:?}",
                path.display()
            )))
        }
    })
}

fn module_dataset_name(module: &str) -> String {
    match module {
        "FFF" => "oulad_stem".to_string(),
        "BBB" => "oulad_social".to_string(),
        other => format!("oulad_{}", other.to_lowercase()),
    }
}

/// Loads one OULAD module as a dataset: 9 profile features plus 8 activity
/// counts per student.
pub fn load_oulad(files: &OuladFiles, module: &str) -> Result<Dataset<f64>> {
    files.check()?;
    let students = read_students(&files.student_info, module)?;
    if students.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} has no usable rows for module {module:?}",
            files.student_info.display()
        )));
    }
    let kept: HashMap<u64, String> = students
        .iter()
        .map(|s| (s.id, s.profile[0].clone()))
        .collect();
    let activity = read_activity(files, module, &kept)?;

    let n = students.len();
    let mut score = Vec::with_capacity(n);
    let mut label = Vec::with_capacity(n);
    let mut sensitive = Vec::with_capacity(n);
    for s in &students {
        let v = outcome_score(&s.final_result, &files.student_info)?;
        score.push(v);
        label.push(u8::from(v >= SCORE_THRESHOLD));
        sensitive.push(match s.profile[1].as_str() {
            "M" => 1,
            "F" => 0,
            other => {
                return Err(Error::InvalidInput(format!(
                    "{} has unknown gender {other:?}",
                    files.student_info.display()
                )))
            }
        });
    }

    let mut features: Vec<Feature<f64>> = Vec::with_capacity(17);
    for (p, name) in PROFILE_FEATURES.iter().enumerate() {
        let cells: Vec<&str> = students.iter().map(|s| s.profile[p].as_str()).collect();
        let numeric = matches!(*name, "num_of_prev_attempts" | "studied_credits");
        let feature = if numeric {
            let mut values = Vec::with_capacity(n);
            for (s, cell) in students.iter().zip(&cells) {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::InvalidInput(format!(
                        "{} student {}: {name} {cell:?} is not a number",
                        files.student_info.display(),
                        s.id
                    ))
                })?;
                values.push(v);
            }
            Feature {
                name: name.to_string(),
                sensitive: false,
                data: FeatureData::Numeric(values),
            }
        } else {
            super::student::infer_column_categorical(name, &cells, *name == "gender")
        };
        features.push(feature);
    }
    let activity_of = |id: u64| activity.get(&id);
    let derived: [(&str, Box<dyn Fn(&Activity) -> f64>); 8] = [
        ("num_CMA", Box::new(|a: &Activity| a.cma)),
        ("num_TMA", Box::new(|a: &Activity| a.tma)),
        ("login_day", Box::new(|a: &Activity| a.days.len() as f64)),
        ("num_logins", Box::new(|a: &Activity| a.clicks)),
        ("forumng", Box::new(|a: &Activity| a.by_type[0])),
        ("glossary", Box::new(|a: &Activity| a.by_type[1])),
        ("homepage", Box::new(|a: &Activity| a.by_type[2])),
        ("resource", Box::new(|a: &Activity| a.by_type[3])),
    ];
    for (name, get) in derived {
        let values = students
            .iter()
            .map(|s| activity_of(s.id).map(&get).unwrap_or(0.0))
            .collect();
        features.push(Feature {
            name: name.to_string(),
            sensitive: false,
            data: FeatureData::Numeric(values),
        });
    }

    Dataset::new(
        module_dataset_name(module),
        students.iter().map(|s| s.id).collect(),
        sensitive,
        score,
        label,
        vec![1.0; n],
        SCORE_THRESHOLD,
        features,
    )
}

/// Restricts an OULAD dataset to the 9 enrolment-profile features, the
/// harder variant of the task. A dataset already reduced passes through
/// unchanged; a dataset missing any profile feature is rejected.
pub fn make_complex_variant(ds: &Dataset<f64>) -> Result<Dataset<f64>> {
    for name in PROFILE_FEATURES {
        if ds.feature(name).is_none() {
            return Err(Error::InvalidInput(format!(
                "dataset {} has no {name:?} feature, cannot reduce to the profile set",
                ds.name
            )));
        }
    }
    if ds.features.len() == PROFILE_FEATURES.len() {
        return Ok(ds.clone());
    }
    let features: Vec<Feature<f64>> = PROFILE_FEATURES
        .iter()
        .map(|name| ds.feature(name).expect("checked above").clone())
        .collect();
    Dataset::from_parts(
        format!("{}_complex", ds.name),
        ds.ids.clone(),
        ds.sensitive.clone(),
        ds.score.clone(),
        ds.label.clone(),
        ds.weight.clone(),
        ds.threshold,
        features,
        ds.group_removed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::student::tests::write_temp;

    const STUDENT_INFO: &str = "\
code_module,code_presentation,id_student,gender,region,highest_education,imd_band,age_band,num_of_prev_attempts,studied_credits,disability,final_result
FFF,2013J,11,M,North,HE,20-30%,0-35,0,60,N,Pass
FFF,2014J,11,M,North,HE,20-30%,0-35,1,60,N,Fail
FFF,2013J,22,F,South,A Level,10-20,0-35,0,120,Y,Distinction
FFF,2013J,33,M,North,HE,,0-35,0,60,N,Pass
FFF,2014B,44,F,South,HE,20-30%,35-55,0,30,N,Withdrawn
BBB,2013J,55,F,South,HE,20-30%,0-35,0,60,N,Pass
BBB,2013J,66,M,North,HE,20-30%,0-35,0,60,N,Fail
";

    const VLE: &str = "\
id_site,code_module,code_presentation,activity_type,week_from,week_to
901,FFF,2014J,forumng,,
902,FFF,2014J,homepage,,
903,FFF,2013J,resource,,
904,BBB,2013J,forumng,,
905,FFF,2013J,oucontent,,
";

    const STUDENT_VLE: &str = "\
code_module,code_presentation,id_student,id_site,date,sum_click
FFF,2014J,11,901,-5,3
FFF,2014J,11,902,-5,2
FFF,2014J,11,901,4,7
FFF,2013J,11,903,0,9
FFF,2013J,22,903,1,4
FFF,2013J,22,905,1,5
FFF,2013J,33,903,2,2
BBB,2013J,55,904,0,8
";

    const ASSESSMENTS: &str = "\
code_module,code_presentation,id_assessment,assessment_type,date,weight
FFF,2014J,801,TMA,19,10
FFF,2014J,802,CMA,47,10
FFF,2013J,803,TMA,19,10
FFF,2013J,804,Exam,229,100
BBB,2013J,805,TMA,19,10
";

    const STUDENT_ASSESSMENT: &str = "\
id_assessment,id_student,date_submitted,is_banked,score
801,11,18,0,78
802,11,45,0,82
801,22,17,0,90
803,22,18,0,91
804,22,230,0,88
803,33,18,0,70
805,55,18,0,60
";

    fn fixture_files(tag: &str) -> OuladFiles {
        OuladFiles {
            student_info: write_temp(&format!("oulad-{tag}-info.csv"), STUDENT_INFO),
            student_vle: write_temp(&format!("oulad-{tag}-svle.csv"), STUDENT_VLE),
            vle: write_temp(&format!("oulad-{tag}-vle.csv"), VLE),
            student_assessment: write_temp(&format!("oulad-{tag}-sasmt.csv"), STUDENT_ASSESSMENT),
            assessments: write_temp(&format!("oulad-{tag}-asmt.csv"), ASSESSMENTS),
        }
    }

    fn numeric(ds: &Dataset<f64>, name: &str) -> Vec<f64> {
        match &ds.feature(name).unwrap().data {
            FeatureData::Numeric(v) => v.clone(),
            _ => panic!("{name} must be numeric"),
        }
    }

    #[test]
    fn keeps_latest_enrolment_and_drops_incomplete_rows() {
        let files = fixture_files("dedup");
        let ds = load_oulad(&files, "FFF").unwrap();
        assert_eq!(ds.name, "oulad_stem");
        // Student 33 has no deprivation band; student 11 keeps only the
        // 2014J enrolment; the BBB rows belong to another module.
        assert_eq!(ds.ids, vec![11, 22, 44]);
        assert_eq!(ds.sensitive, vec![1, 0, 0], "men are unprivileged");
        assert_eq!(ds.score, vec![1.0, 3.0, 0.0]);
        assert_eq!(ds.label, vec![0, 1, 0]);
        assert_eq!(ds.threshold, 1.5);
        assert_eq!(numeric(&ds, "num_of_prev_attempts"), vec![1.0, 0.0, 0.0]);
        assert_eq!(numeric(&ds, "studied_credits"), vec![60.0, 120.0, 30.0]);
        let names: Vec<&str> = ds.features.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "code_presentation",
                "gender",
                "region",
                "highest_education",
                "imd_band",
                "age_band",
                "num_of_prev_attempts",
                "studied_credits",
                "disability",
                "num_CMA",
                "num_TMA",
                "login_day",
                "num_logins",
                "forumng",
                "glossary",
                "homepage",
                "resource"
            ]
        );
        assert!(ds.feature("gender").unwrap().sensitive);
        match &ds.feature("code_presentation").unwrap().data {
            FeatureData::Categorical { categories, codes } => {
                assert_eq!(categories, &vec!["2013J", "2014B", "2014J"]);
                assert_eq!(codes, &vec![2, 0, 1]);
            }
            _ => panic!("code_presentation must be categorical"),
        }
    }

    #[test]
    fn click_and_assessment_counts_match_hand_tallies() {
        let files = fixture_files("counts");
        let ds = load_oulad(&files, "FFF").unwrap();
        // Student 11 counts only 2014J activity: clicks 3+2+7, days {-5, 4},
        // forumng 3+7, homepage 2, and one TMA plus one CMA. The 2013J click
        // row and the dropped student 33 leave no trace.
        assert_eq!(numeric(&ds, "num_logins"), vec![12.0, 9.0, 0.0]);
        assert_eq!(numeric(&ds, "login_day"), vec![2.0, 1.0, 0.0]);
        assert_eq!(numeric(&ds, "forumng"), vec![10.0, 0.0, 0.0]);
        assert_eq!(numeric(&ds, "homepage"), vec![2.0, 0.0, 0.0]);
        assert_eq!(numeric(&ds, "glossary"), vec![0.0, 0.0, 0.0]);
        // Student 22's resource clicks come from site 903; site 905 has an
        // untracked activity type and only feeds the login totals.
        assert_eq!(numeric(&ds, "resource"), vec![0.0, 4.0, 0.0]);
        // Student 22 sat a 2014J assessment and an exam; neither counts.
        assert_eq!(numeric(&ds, "num_TMA"), vec![1.0, 1.0, 0.0]);
        assert_eq!(numeric(&ds, "num_CMA"), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn other_modules_load_under_their_own_name() {
        let files = fixture_files("social");
        let ds = load_oulad(&files, "BBB").unwrap();
        assert_eq!(ds.name, "oulad_social");
        assert_eq!(ds.ids, vec![55, 66]);
        assert_eq!(ds.label, vec![1, 0]);
        assert_eq!(numeric(&ds, "forumng"), vec![8.0, 0.0]);
        assert_eq!(module_dataset_name("AAA"), "oulad_aaa");
    }

    #[test]
    fn missing_table_is_reported_by_path() {
        let mut files = fixture_files("missing");
        files.vle = PathBuf::from("/nowhere/vle.csv");
        let err = load_oulad(&files, "FFF").unwrap_err();
        assert!(matches!(err, Error::MissingInput(ref p) if p.contains("vle.csv")));
    }

    #[test]
    fn unknown_module_is_rejected() {
        let files = fixture_files("nomod");
        let err = load_oulad(&files, "ZZZ").unwrap_err().to_string();
        assert!(err.contains("ZZZ"), "{err}");
    }

    #[test]
    fn complex_variant_keeps_only_the_profile() {
        let files = fixture_files("complex");
        let ds = load_oulad(&files, "FFF").unwrap();
        let complex = make_complex_variant(&ds).unwrap();
        assert_eq!(complex.name, "oulad_stem_complex");
        assert_eq!(complex.features.len(), 9);
        let names: Vec<&str> = complex.features.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, PROFILE_FEATURES.to_vec());
        assert_eq!(complex.ids, ds.ids);
        assert_eq!(complex.label, ds.label);
        assert_eq!(complex.score, ds.score);
        let again = make_complex_variant(&complex).unwrap();
        assert_eq!(again, complex, "already reduced input is unchanged");
    }

    #[test]
    fn complex_variant_rejects_foreign_datasets() {
        let ds: crate::Dataset64 = crate::synthetic::make_synthetic(16, 1).unwrap();
        let err = make_complex_variant(&ds).unwrap_err().to_string();
        assert!(err.contains("code_presentation"), "{err}");
    }
}
