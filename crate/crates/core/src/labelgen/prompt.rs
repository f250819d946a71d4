use crate::preprocess::CleanCourse;

/// Renders the labeling prompt for one course.
///
/// Fields are spliced in literally; braces or other template-looking text in
/// course data are not interpreted.
pub fn render_prompt(course: &CleanCourse) -> String {
    let mut p = String::with_capacity(
        PROMPT_HEAD.len() + course.name.len() + course.description.len() + course.objective.len() + 400,
    );
    p.push_str(PROMPT_HEAD);
    p.push_str(&course.name);
    p.push_str(", the student learns: ");
    p.push_str(&course.description);
    p.push_str(" and ");
    p.push_str(&course.objective);
    p.push_str(PROMPT_TAIL);
    p
}

const PROMPT_HEAD: &str = "Your goal is to identify UN SDG Goals relevant to students. Given a ";

const PROMPT_TAIL: &str = ". Answer the question: What are the top few most relevant \
sustainable development goals to this course? Your task is to return only the numbers \
of the top few goals separated by commas. Also, never use the goal number 4.";
